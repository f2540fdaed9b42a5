#include "netwatt/num_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace netwatt {

std::string num_str(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string num_str(std::uint64_t v) {
  char buf[24];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string num_str(std::int64_t v) {
  char buf[24];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string eng_joules(double joules) {
  static const char* prefixes[] = {"aJ", "fJ", "pJ", "nJ", "uJ", "mJ", "J", "kJ", "MJ"};
  if (joules == 0.0) return "0 J";
  double mag = std::fabs(joules);
  int tier = 6; // index of "J"
  while (tier > 0 && mag < 1.0) { mag *= 1e3; tier--; }
  while (tier < 8 && mag >= 1000.0) { mag /= 1e3; tier++; }
  double scaled = joules * std::pow(10.0, 3.0 * (6 - tier));
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.5g %s", scaled, prefixes[tier]);
  return buf;
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

bool parse_u64(std::string_view s, std::uint64_t& out) {
  if (s.empty()) return false;
  int base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    s.remove_prefix(2);
    base = 16;
  }
  auto res = std::from_chars(s.data(), s.data() + s.size(), out, base);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

bool parse_i64(std::string_view s, std::int64_t& out) {
  if (s.empty()) return false;
  if (s[0] != '-') {
    std::uint64_t u;
    if (!parse_u64(s, u) || u > 0x7fffffffffffffffULL) return false;
    out = static_cast<std::int64_t>(u);
    return true;
  }
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool next_token(std::string_view& line, std::string_view& tok) {
  while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
  if (line.empty() || line.front() == '#') return false;
  size_t i = 0;
  while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '#') i++;
  tok = line.substr(0, i);
  line.remove_prefix(i);
  return true;
}

} // namespace netwatt
