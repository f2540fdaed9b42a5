#ifndef NETWATT_PLATFORM_HPP
#define NETWATT_PLATFORM_HPP

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "netwatt/vfs.hpp"

namespace netwatt {

enum class WireMode { TwoWire, FiveWire };
enum class RouteBitPolicy { Msb, Lsb };

struct NodeDesc {
  int id = 0;
  int cores = 1;
  int threads_per_core = 8;
  OperatingPoint op;
  std::map<int, std::string> dir_bits; // id bit position -> direction name
};

struct LinkDesc {
  int node_a = 0;
  std::string dir_a;
  int node_b = 0;
  std::string dir_b;
  WireMode mode = WireMode::FiveWire;
  int inter_symbol_delay = 0; // switch-clock cycles
  int inter_token_delay = 0;  // switch-clock cycles
  int buffer = 8;             // receive buffer capacity, tokens
};

struct PlatformDesc {
  int id_bits = 1;
  RouteBitPolicy route_policy = RouteBitPolicy::Msb;
  int divide_cycles = 32; // extra thread-occupancy cycles for divide/remainder
  double vdd_min = 0.85, vdd_max = 1.15;
  std::vector<NodeDesc> nodes;
  std::vector<LinkDesc> links;

  const NodeDesc* find_node(int id) const;
  int total_cores() const;
  // Global core numbering is node-major in declaration order.
  bool global_core(int index, int& node_id, int& local_core) const;
  void validate() const;
};

PlatformDesc parse_platform(std::string_view text);
std::string print_platform(const PlatformDesc& p);

} // namespace netwatt

#endif
