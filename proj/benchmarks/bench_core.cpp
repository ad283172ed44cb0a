#include <benchmark/benchmark.h>

#include <random>

#include "branchsim/branches.hpp"
#include "branchsim/hamiltonian.hpp"
#include "branchsim/meanfield.hpp"
#include "branchsim/propagate.hpp"

namespace {

using namespace branchsim;

HamiltonianSpec dephasing_spec(int k) {
  std::vector<double> gs(k);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.05, 0.15);
  for (auto& g : gs) g = u(rng);
  return build_dephasing_model(k, gs, 0.4 * pauli_x() + 0.5 * pauli_z());
}

StateVector angled_bath(int k, double theta) {
  StateVector q(2);
  q << std::cos(theta), std::sin(theta);
  StateVector psi = q;
  for (int i = 1; i < k; ++i) psi = tensor_product(psi, q);
  return psi;
}

void BM_JointKrylovStep(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const HamiltonianSpec spec = dephasing_spec(k);
  PropagatorConfig cfg;
  cfg.dt = 1e-3;
  JointPropagator prop(spec, cfg);
  StateVector sup(2);
  sup << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  StateVector joint = tensor_product(sup, angled_bath(k, 0.35));
  for (auto _ : state) {
    joint = prop.step(joint);
    benchmark::DoNotOptimize(joint.data());
  }
  state.SetComplexityN(1 << (k + 1));
}
BENCHMARK(BM_JointKrylovStep)->Arg(4)->Arg(6)->Arg(8)->Arg(10)->Complexity();

void BM_JointSplitStep(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const HamiltonianSpec spec = dephasing_spec(k);
  PropagatorConfig cfg;
  cfg.dt = 1e-3;
  cfg.method = Method::SplitSecondOrder;
  JointPropagator prop(spec, cfg);
  StateVector sup(2);
  sup << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  StateVector joint = tensor_product(sup, angled_bath(k, 0.35));
  for (auto _ : state) {
    joint = prop.step(joint);
    benchmark::DoNotOptimize(joint.data());
  }
  state.SetComplexityN(1 << (k + 1));
}
BENCHMARK(BM_JointSplitStep)->Arg(4)->Arg(6)->Arg(8)->Arg(10)->Complexity();

void BM_TdhStep(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const HamiltonianSpec spec = dephasing_spec(k);
  StateVector sup(2);
  sup << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  MeanFieldState mf = make_meanfield_state(sup, angled_bath(k, 0.35), spec);
  PropagatorConfig cfg;
  for (auto _ : state) {
    mf = tdh_step(mf, spec, 1e-3, cfg);
    benchmark::DoNotOptimize(mf.lambda);
  }
}
BENCHMARK(BM_TdhStep)->Arg(4)->Arg(8);

void BM_GridPairAssembly(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  for (auto _ : state) {
    GridPairParams p;
    p.n_a = n;
    p.n_b = n;
    p.q_product = 0.5;
    p.softening = 1.0;
    const HamiltonianSpec spec = build_grid_pair(p);
    benchmark::DoNotOptimize(spec.interaction.size());
  }
}
BENCHMARK(BM_GridPairAssembly)->Arg(16)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
