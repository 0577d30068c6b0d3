// Serial vs OpenMP kernels on a 96³ volume. Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "pcaet/kernels.hpp"

namespace k = pcaet::kernels;
using pcaet::Complex;

namespace {

constexpr k::VolumeShape kShape{96, 96, 96};

std::vector<double> noise(std::size_t n, unsigned seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(g);
  return v;
}

template <auto Fn>
void shear(benchmark::State& st) {
  const auto in = noise(kShape.size(), 1);
  std::vector<double> out(in.size());
  const k::Shear sh{0.41, 47.5};
  for (auto _ : st) {
    Fn(in, out, kShape, sh);
    benchmark::DoNotOptimize(out.data());
  }
  st.SetBytesProcessed(st.iterations() * in.size() * sizeof(double));
}

template <auto Fn>
void bin(benchmark::State& st) {
  const auto in = noise(kShape.size(), 2);
  std::vector<double> out(in.size() / 4);
  for (auto _ : st) {
    Fn(in, out, kShape, 4);
    benchmark::DoNotOptimize(out.data());
  }
}

template <auto Fn>
void transmit(benchmark::State& st) {
  const std::size_t n = 512 * 512;
  const auto w = noise(n, 3);
  std::vector<Complex> psi(n, Complex(1.0, 0.0)), out(n);
  for (auto _ : st) {
    Fn(w, psi, out, 6.5e-4, 1.0);
    benchmark::DoNotOptimize(out.data());
  }
}

template <auto Grad, auto Div, auto Project>
void tv_step(benchmark::State& st) {
  const auto x = noise(kShape.size(), 4);
  std::vector<double> p(3 * x.size()), div(x.size());
  for (auto _ : st) {
    Grad(x, p, kShape);
    Project(p, kShape);
    Div(p, div, kShape);
    benchmark::DoNotOptimize(div.data());
  }
}

template <auto Fn>
void render(benchmark::State& st) {
  std::mt19937_64 g(5);
  std::uniform_real_distribution<double> pos(4.0, 92.0);
  std::vector<k::AtomBlob> atoms(2000);
  for (auto& a : atoms) a = {pos(g), pos(g), pos(g), 150.0, 1.5};
  std::vector<double> out(kShape.size());
  for (auto _ : st) {
    std::fill(out.begin(), out.end(), 0.0);
    Fn(atoms, out, kShape);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(shear<k::serial::shear_x>)->Name("shear_x/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(shear<k::omp::shear_x>)->Name("shear_x/omp")->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(shear<k::serial::shear_z_adjoint>)->Name("shear_z_adjoint/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(shear<k::omp::shear_z_adjoint>)->Name("shear_z_adjoint/omp")->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(bin<k::serial::bin_sum>)->Name("bin_sum/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(bin<k::omp::bin_sum>)->Name("bin_sum/omp")->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(transmit<k::serial::transmit>)->Name("transmit/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(transmit<k::omp::transmit>)->Name("transmit/omp")->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(tv_step<k::serial::gradient3, k::serial::divergence3, k::serial::project_unit_ball>)
    ->Name("tv_dual_step/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(tv_step<k::omp::gradient3, k::omp::divergence3, k::omp::project_unit_ball>)
    ->Name("tv_dual_step/omp")->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(render<k::serial::render_blobs>)->Name("render_blobs/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(render<k::omp::render_blobs>)->Name("render_blobs/omp")->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
