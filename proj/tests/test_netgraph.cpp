#include <doctest.h>

#include <fstream>
#include <sstream>

#include "netwatt/netgraph.hpp"

using namespace netwatt;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PlatformDesc dual() {
  return parse_platform(slurp(std::string(NETWATT_DATA_DIR) + "/platforms/dualcore.platform"));
}

EnergyLedger sample_ledger() {
  EnergyLedger l;
  l.core_j[{0, 0}] = 1e-3;
  l.core_j[{1, 0}] = 5e-4;
  l.switch_j[0] = 1e-5;
  l.switch_j[1] = 2e-5;
  l.link_dir_j[{0, 0}] = 3e-6;
  l.link_dir_j[{0, 1}] = 1e-6;
  l.t0_ns = 0;
  l.t1_ns = 1000;
  l.has_span = true;
  return l;
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s)
    if (c == '\n') n++;
  return n;
}

} // namespace

TEST_CASE("the dual-core platform builds two switches, two cores and one edge") {
  NetworkGraph g = build_graph(dual());
  CHECK(g.switches.size() == 2);
  CHECK(g.cores.size() == 2);
  CHECK(g.links.size() == 1);
  CHECK(g.total() == 0.0);
}

TEST_CASE("an empty platform builds an empty graph") {
  PlatformDesc p;
  NetworkGraph g = build_graph(p);
  CHECK(g.switches.empty());
  CHECK(g.cores.empty());
  CHECK(g.links.empty());
}

TEST_CASE("ledger application annotates and accumulates") {
  NetworkGraph g = build_graph(dual());
  EnergyLedger l = sample_ledger();
  apply_ledger(g, l);
  CHECK(g.cores[0].energy_j == 1e-3);
  CHECK(g.links[0].energy_j == doctest::Approx(4e-6));
  CHECK(g.outbound_link_energy(0) == doctest::Approx(3e-6));
  CHECK(g.outbound_link_energy(1) == doctest::Approx(1e-6));
  double t1 = g.total();
  CHECK(t1 == doctest::Approx(l.total()));
  apply_ledger(g, l); // two ledgers sum element-wise
  CHECK(g.cores[0].energy_j == 2e-3);
  CHECK(g.total() == doctest::Approx(2 * t1));
}

TEST_CASE("ledgers with unknown elements are rejected") {
  NetworkGraph g = build_graph(dual());
  EnergyLedger l;
  l.core_j[{5, 0}] = 1.0;
  CHECK_THROWS_AS(apply_ledger(g, l), ParseError);
  EnergyLedger l2;
  l2.link_dir_j[{4, 0}] = 1.0;
  CHECK_THROWS_AS(apply_ledger(g, l2), ParseError);
}

TEST_CASE("the text report is deterministic and complete") {
  NetworkGraph g = build_graph(dual());
  apply_ledger(g, sample_ledger());
  std::string report = text_report(g);
  // header plus 2 cores, 2 switches, 1 link, total and span
  CHECK(count_lines(report) == 8);
  CHECK(report.find("core 0.0") != std::string::npos);
  CHECK(report.find("link 0 (0-1)") != std::string::npos);
  CHECK(report.find("total") != std::string::npos);
  CHECK(text_report(g) == report);

  // percentage shares sum to 100 within rounding
  double shares = 0;
  size_t pos = 0;
  while ((pos = report.find('%', pos)) != std::string::npos) {
    size_t start = report.rfind(' ', pos - 8);
    shares += std::stod(report.substr(start, pos - start));
    pos++;
  }
  CHECK(shares == doctest::Approx(100.0).epsilon(0.01));

  NetworkGraph empty = build_graph(PlatformDesc{});
  std::string er = text_report(empty);
  CHECK(count_lines(er) == 3); // header, zero total, zero span
  CHECK(er.find("total  0 J") != std::string::npos);
}

TEST_CASE("visualization colors scale from cold to hot endpoints") {
  NetworkGraph g = build_graph(dual());
  std::string cold = emit_visualization(g);
  // all-zero energies sit at the cold endpoints
  CHECK(cold.find("#00c000") != std::string::npos); // cores: green
  CHECK(cold.find("#4040ff") != std::string::npos); // switches: blue
  CHECK(cold.find("#c0c0c0") != std::string::npos); // links: neutral gray

  apply_ledger(g, sample_ledger());
  std::string hot = emit_visualization(g);
  CHECK(hot.find("#ff0000") != std::string::npos); // the max core is fully red
  CHECK(hot.find("#ffc0cb") != std::string::npos); // the max switch is pink
  CHECK(hot != cold);
  CHECK(emit_visualization(g) == hot); // byte-identical across runs

  // scale bounds are published so two graphs can share them
  CHECK(hot.find("// scale cores 5e-04 0.001 J") != std::string::npos);
  CHECK(hot.find("// scale switches") != std::string::npos);
  CHECK(hot.find("// scale links") != std::string::npos);

  VizScale shared;
  shared.cores = {0.0, 2e-3};
  std::string rescaled = emit_visualization(g, shared);
  CHECK(rescaled.find("// scale cores 0 0.002 J") != std::string::npos);
  CHECK(rescaled.find("#ff0000") == std::string::npos); // 1 mJ is mid-scale now
}

TEST_CASE("dot output is structurally well formed") {
  NetworkGraph g = build_graph(dual());
  apply_ledger(g, sample_ledger());
  std::string dot = emit_visualization(g);
  CHECK(dot.rfind("graph energy {", 0) == 0);
  CHECK(dot.find("s0 -- c0_0") != std::string::npos);
  CHECK(dot.find("s0 -- s1") != std::string::npos);
  CHECK(dot.find("links out") != std::string::npos); // switches aggregate outbound link energy
  CHECK(dot.back() == '\n');
}
