#ifndef NETWATT_NET_SIM_HPP
#define NETWATT_NET_SIM_HPP

#include <compare>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "netwatt/platform.hpp"
#include "netwatt/trace.hpp"

namespace netwatt {

struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ChanId {
  int node = -1;
  int core = -1;
  int ce = -1;
  auto operator<=>(const ChanId&) const = default;
};

constexpr std::uint8_t kCtEnd = 1; // control token value closing a route

struct NetToken {
  TokenKind kind = TokenKind::Data;
  std::uint8_t payload = 0; // data byte or control token value
  int credit_value = 0;     // CREDIT only
  ChanId src;               // owning source chanend (data/header/END)
  ChanId dest;              // resolved destination chanend
};

// Channel endpoint. rx is fed by the local switch (or directly for core-local
// transfers); tx drains toward the switch.
struct Chanend {
  ChanId id;
  bool connected = false;
  ChanId dest;
  std::deque<NetToken> rx;
  int rx_capacity = 8;
  std::deque<NetToken> tx;
  int tx_capacity = 8;
  bool route_open = false; // sender side: header sent, END not yet
  bool auto_drain = false; // synthetic-traffic sink: consume on delivery
  std::uint64_t drained = 0;

  int rx_free() const { return rx_capacity - static_cast<int>(rx.size()); }
  int tx_free() const { return tx_capacity - static_cast<int>(tx.size()); }
};

enum class LinkStatus { Uninit, HelloQueued, HelloSent, Open };

// One direction of a physical link. Tokens serialize over the wire; the
// receive buffer sits at to_node and is protected by credit.
struct LinkDir {
  int link_id = 0;
  int dir = 0; // 0 = a->b, 1 = b->a
  int from_node = 0;
  int to_node = 0;
  WireMode mode = WireMode::FiveWire;
  int isd = 0;
  int itd = 0;
  int capacity = 8;

  LinkStatus status = LinkStatus::Uninit;
  int sender_credit = 0;
  std::deque<NetToken> rx;
  std::optional<ChanId> route_owner;
  bool wire_busy = false;
  NetToken wire_token;
  int pending_credit = 0; // freed slots at to_node not yet granted
  bool hello_wanted = false;
  bool handshake_granted = false; // receiver has issued the initial grant

  // accounting (flow-control invariants and conservation checks)
  int inflight_data = 0;         // data/header/END on the wire
  int inflight_credit_value = 0; // credit value on the reverse wire for this dir
  std::uint64_t tokens_sent = 0;
  std::uint64_t tokens_received = 0;
};

struct SwitchState {
  int node_id = 0;
  std::map<int, std::string> dir_bits;
  std::map<std::string, std::vector<int>> dir_links; // direction -> outgoing link_dir indexes
  std::map<ChanId, int> routes;                      // source chanend -> claimed link_dir
};

// Position of the routing decision bit, or -1 when the ids match (local).
int route_bit(int own_id, int dest_id, int id_bits, RouteBitPolicy policy);

// Direction name for a destination; throws SimError when the differing bit has
// no direction entry. Returns empty string for local delivery.
std::string route_direction(const SwitchState& sw, int dest_id, int id_bits, RouteBitPolicy policy);

// A token is 10 transfer-bits: 5 symbols in five-wire mode, 10 in two-wire.
std::uint64_t token_transmit_cycles(WireMode mode, int inter_symbol_delay, int inter_token_delay);
inline std::uint64_t token_transmit_cycles(const LinkDir& ld) {
  return token_transmit_cycles(ld.mode, ld.isd, ld.itd);
}

} // namespace netwatt

#endif
