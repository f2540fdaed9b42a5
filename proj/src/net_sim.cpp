#include "netwatt/net_sim.hpp"

#include "netwatt/num_io.hpp"

namespace netwatt {

int route_bit(int own_id, int dest_id, int id_bits, RouteBitPolicy policy) {
  int diff = own_id ^ dest_id;
  if (diff == 0) return -1;
  if (policy == RouteBitPolicy::Msb) {
    for (int b = id_bits - 1; b >= 0; b--)
      if (diff & (1 << b)) return b;
  } else {
    for (int b = 0; b < id_bits; b++)
      if (diff & (1 << b)) return b;
  }
  return -1;
}

std::string route_direction(const SwitchState& sw, int dest_id, int id_bits, RouteBitPolicy policy) {
  int bit = route_bit(sw.node_id, dest_id, id_bits, policy);
  if (bit < 0) return "";
  auto it = sw.dir_bits.find(bit);
  if (it == sw.dir_bits.end())
    throw SimError("node " + num_str(static_cast<std::int64_t>(sw.node_id)) + " cannot route to node " +
                   num_str(static_cast<std::int64_t>(dest_id)) + ": no direction for id bit " +
                   num_str(static_cast<std::int64_t>(bit)));
  return it->second;
}

std::uint64_t token_transmit_cycles(WireMode mode, int inter_symbol_delay, int inter_token_delay) {
  // 8 data bits + 2 framing bits; two bits per symbol on five wires, one on two
  std::uint64_t symbols = mode == WireMode::FiveWire ? 5 : 10;
  return symbols * static_cast<std::uint64_t>(inter_symbol_delay) + static_cast<std::uint64_t>(inter_token_delay);
}

} // namespace netwatt
