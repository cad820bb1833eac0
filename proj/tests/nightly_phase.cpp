// Phase-transition grids at N = 256, 10 trials per cell. Checks containment:
// on Bernoulli the KZIHT success region covers IHT's cellwise (within 0.1),
// on Hadamard the two grids agree cellwise (within 0.1).

#include <cmath>
#include <cstdio>

#include "kzsparse/harness.hpp"

using namespace kzsparse;

namespace {

PhaseGrid grid(OperatorKind kind, SolverKind solver) {
  ExperimentConfig c;
  c.matrix = {kind, 128, 256};
  c.m_values = {64, 96, 128, 160, 192, 224};
  c.s_values = {4, 8, 16, 24, 32, 48};
  c.trials = 10;
  c.base_seed = 0;
  c.solver.name = solver;
  c.solver.target_error = 1e-12;
  return run_phase_transition(c);
}

void print(const char* title, const PhaseGrid& g) {
  std::printf("%s\n   m\\s", title);
  for (auto s : g.s_values) std::printf(" %5zu", s);
  std::printf("\n");
  for (std::size_t i = 0; i < g.m_values.size(); ++i) {
    std::printf("  %4zu", g.m_values[i]);
    for (double p : g.success_prob[i]) std::printf(" %5.1f", p);
    std::printf("\n");
  }
}

}  // namespace

int main() {
  int failures = 0;
  for (auto kind : {OperatorKind::Bernoulli, OperatorKind::SubsampledBOS}) {
    const auto iht = grid(kind, SolverKind::IHT);
    const auto kz = grid(kind, SolverKind::KZIHT);
    print(("IHT " + to_string(kind)).c_str(), iht);
    print(("KZIHT " + to_string(kind)).c_str(), kz);
    std::size_t bad = 0;
    std::size_t strictly_better = 0;
    for (std::size_t i = 0; i < iht.m_values.size(); ++i) {
      for (std::size_t j = 0; j < iht.s_values.size(); ++j) {
        const double a = iht.success_prob[i][j], b = kz.success_prob[i][j];
        const bool ok = kind == OperatorKind::Bernoulli ? b >= a - 0.1 - 1e-12 : std::abs(a - b) <= 0.1 + 1e-12;
        if (!ok) ++bad;
        if (b > a) ++strictly_better;
      }
    }
    const bool pass = bad == 0;
    if (!pass) ++failures;
    std::printf("%s nightly %s grid: %zu violating cells, KZIHT strictly better in %zu cells\n",
                pass ? "PASS" : "FAIL",
                kind == OperatorKind::Bernoulli ? "bernoulli containment" : "hadamard equality",
                bad, strictly_better);
  }
  return failures == 0 ? 0 : 1;
}
