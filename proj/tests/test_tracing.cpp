#include <doctest.h>

#include <cmath>
#include <random>

#include "pcaet/tracing.hpp"
#include "test_util.hpp"

using namespace pcaet;

namespace {

// Point-sampled Gaussian at voxel centres, the model the fitter assumes.
PotentialVolume sampled_blob(int n, double cx, double cy, double cz, double amp, double s) {
  PotentialVolume v(n, n, n, 0.5);
  for (int z = 0; z < n; ++z)
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        const double dx = x + 0.5 - cx, dy = y + 0.5 - cy, dz = z + 0.5 - cz;
        v(x, y, z) = amp * std::exp(-0.5 * (dx * dx + dy * dy + dz * dz) / (s * s));
      }
  return v;
}

// Periodic direct convolution with the normalized difference kernel.
PotentialVolume direct_dog(const PotentialVolume& v, double s1, double s2) {
  const int n = v.nx;
  const auto wrap = [&](int i) { return i <= n / 2 ? i : i - n; };
  std::vector<double> k(v.size());
  double a = 0, b = 0;
  for (int z = 0; z < n; ++z)
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        const double d2 = double(wrap(x) * wrap(x) + wrap(y) * wrap(y) + wrap(z) * wrap(z));
        a += std::exp(-0.5 * d2 / (s1 * s1));
        b += std::exp(-0.5 * d2 / (s2 * s2));
      }
  for (int z = 0; z < n; ++z)
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        const double d2 = double(wrap(x) * wrap(x) + wrap(y) * wrap(y) + wrap(z) * wrap(z));
        k[v.index(x, y, z)] = std::exp(-0.5 * d2 / (s1 * s1)) / a - std::exp(-0.5 * d2 / (s2 * s2)) / b;
      }
  PotentialVolume out(n, n, n, v.pitch);
  for (int z = 0; z < n; ++z)
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        double acc = 0.0;
        for (int zz = 0; zz < n; ++zz)
          for (int yy = 0; yy < n; ++yy)
            for (int xx = 0; xx < n; ++xx)
              acc += v(xx, yy, zz) * k[v.index((x - xx + n) % n, (y - yy + n) % n, (z - zz + n) % n)];
        out(x, y, z) = acc;
      }
  return out;
}

}  // namespace

TEST_CASE("DoG filter: zero sum, constant input, direct-convolution oracle") {
  PotentialVolume c(12, 12, 12, 0.5, 3.0);
  for (double v : dog_filter(c).values) CHECK(std::abs(v) < 1e-12);
  PotentialVolume delta(12, 12, 12, 0.5);
  delta(0, 0, 0) = 1.0;
  double ksum = 0.0;
  for (double v : dog_filter(delta).values) ksum += v;
  CHECK(std::abs(ksum) < 1e-12);

  const PotentialVolume blob = sampled_blob(16, 8.5, 8.5, 8.5, 1.0, 1.0);
  const PotentialVolume fast = dog_filter(blob), slow = direct_dog(blob, 0.5, 1.0);
  for (std::size_t i = 0; i < fast.size(); ++i) CHECK(std::abs(fast.values[i] - slow.values[i]) < 1e-12);
  CHECK(fast(8, 8, 8) > 0.0);
}

TEST_CASE("candidates: single blob, two blobs, ramp, ties") {
  const auto one = sampled_blob(20, 10.5, 9.5, 11.5, 10.0, 1.2);
  const auto c1 = find_candidates(dog_filter(one));
  REQUIRE(c1.size() == 1);
  CHECK(c1[0].x == 10);
  CHECK(c1[0].y == 9);
  CHECK(c1[0].z == 11);

  auto two = sampled_blob(24, 9.5, 12.5, 12.5, 10.0, 1.2);
  const auto other = sampled_blob(24, 15.5, 12.5, 12.5, 10.0, 1.2);
  for (std::size_t i = 0; i < two.size(); ++i) two.values[i] += other.values[i];
  const PotentialVolume f2 = dog_filter(two);
  // far tails of the difference kernel leave tiny ripples; ignore them
  const auto c2 = find_candidates(f2, 2, 0.01 * f2(9, 12, 12));
  REQUIRE(c2.size() == 2);
  CHECK(c2[0].x + c2[1].x == 9 + 15);

  PotentialVolume ramp(12, 12, 12, 0.5);
  for (int z = 0; z < 12; ++z)
    for (int y = 0; y < 12; ++y)
      for (int x = 0; x < 12; ++x) ramp(x, y, z) = x + 2 * y + 3 * z;
  CHECK(find_candidates(ramp).empty());

  PotentialVolume plateau(10, 10, 10, 0.5);
  plateau(4, 5, 5) = 1.0;
  plateau(5, 5, 5) = 1.0;
  const auto tie = find_candidates(plateau);
  REQUIRE(tie.size() == 1);
  CHECK(tie[0].x == 4);
}

TEST_CASE("Gaussian fit: sub-voxel recovery, flat window, translation equivariance") {
  const auto v = sampled_blob(20, 10.5 + 0.3, 10.5 - 0.2, 10.5 + 0.1, 40.0, 1.3);
  const GaussianFit f = fit_gaussian_3d(v, {10, 10, 10});
  CHECK(f.converged);
  CHECK(std::abs(f.x - 10.8) < 0.02);
  CHECK(std::abs(f.y - 10.3) < 0.02);
  CHECK(std::abs(f.z - 10.6) < 0.02);
  CHECK(f.amplitude == doctest::Approx(40.0).epsilon(1e-3));
  CHECK(f.width == doctest::Approx(1.3).epsilon(1e-3));

  const auto shifted = sampled_blob(20, 11.5 + 0.3, 10.5 - 0.2, 10.5 + 0.1, 40.0, 1.3);
  const GaussianFit g = fit_gaussian_3d(shifted, {11, 10, 10});
  CHECK(std::abs((g.x - f.x) - 1.0) < 0.02);
  CHECK(std::abs(g.y - f.y) < 0.02);

  PotentialVolume flat(12, 12, 12, 0.5, 2.0);
  const GaussianFit z = fit_gaussian_3d(flat, {6, 6, 6});
  CHECK((!z.converged || std::abs(z.amplitude) < 15.0 * 0.5 || !(z.width >= 1.0)));
}

TEST_CASE("trace_atoms: single atom, merge of close pair, empty volume") {
  const VolumeGrid grid{24, 24, 24, 0.5};
  const Atom a{12.15 * 0.5, 11.8 * 0.5, 12.4 * 0.5, Species::Heavy, 150.0, 0.6};
  const TracedAtoms t = trace_atoms(render_potential({a}, grid));
  REQUIRE(t.sites.size() == 1);
  const double err = std::sqrt(std::pow(t.sites[0].x - 12.15, 2) + std::pow(t.sites[0].y - 11.8, 2) +
                               std::pow(t.sites[0].z - 12.4, 2));
  CHECK(err < 0.05);

  const Atom b{13.15 * 0.5, 11.8 * 0.5, 12.4 * 0.5, Species::Heavy, 150.0, 0.6};
  const TracedAtoms m = trace_atoms(render_potential({a, b}, grid));
  CHECK(m.sites.size() == 1);

  CHECK(trace_atoms(PotentialVolume(16, 16, 16, 0.5)).sites.empty());
}

TEST_CASE("trace_atoms keeps well separated atoms apart and the merge invariant") {
  const VolumeGrid grid{32, 32, 32, 0.5};
  AtomList atoms;
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        atoms.push_back({(8.5 + 7 * i + u(g)) * 0.5, (8.5 + 7 * j + u(g)) * 0.5, (8.5 + 7 * k + u(g)) * 0.5,
                         (i + j + k) % 2 ? Species::Light : Species::Heavy, (i + j + k) % 2 ? 75.0 : 150.0, 0.6});
  TracedAtoms t = trace_atoms(render_potential(atoms, grid));
  CHECK(t.sites.size() == atoms.size());
  for (std::size_t i = 0; i < t.sites.size(); ++i)
    for (std::size_t j = i + 1; j < t.sites.size(); ++j) {
      const double d = std::hypot(t.sites[i].x - t.sites[j].x, t.sites[i].y - t.sites[j].y, t.sites[i].z - t.sites[j].z);
      CHECK(d >= 2.25);
    }
  classify_species(t);
  const TraceReport r = score(t.to_atoms(), atoms);
  CHECK(r.atoms_found == 100.0);
  CHECK(r.false_positives == 0.0);
  CHECK(r.correct_species == 100.0);
  CHECK(r.position_error_mean_pm < 2.5);
}

TEST_CASE("species classification") {
  std::mt19937_64 g(11);
  std::normal_distribution<double> light(50.0, 2.5), heavy(100.0, 5.0);
  TracedAtoms t;
  t.pitch = 0.5;
  std::vector<Species> truth;
  for (int i = 0; i < 400; ++i) {
    const bool h = i % 3 == 0;
    t.sites.push_back({0, 0, 0, h ? heavy(g) : light(g), 1.2, Species::Unclassified});
    truth.push_back(h ? Species::Heavy : Species::Light);
  }
  const Classification c = classify_species(t);
  REQUIRE(c.bimodal);
  CHECK(c.threshold > c.mean_low);
  CHECK(c.threshold < c.mean_high);
  int ok = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) ok += t.sites[i].species == truth[i];
  CHECK(ok >= 0.98 * 400);

  TracedAtoms same;
  for (int i = 0; i < 50; ++i) same.sites.push_back({0, 0, 0, 80.0, 1.2, Species::Heavy});
  const Classification u = classify_species(same);
  CHECK_FALSE(u.bimodal);
  for (const auto& s : same.sites) CHECK(s.species == Species::Unclassified);
}

TEST_CASE("scoring: perfect, displaced, translation invariance, modes") {
  AtomList truth;
  for (int i = 0; i < 10; ++i) truth.push_back({2.0 * i, 1.0, 3.0, i % 2 ? Species::Light : Species::Heavy, 1, 1});
  const TraceReport p = score(truth, truth);
  CHECK(p.position_error_mean_pm == 0.0);
  CHECK(p.atoms_found == 100.0);
  CHECK(p.false_positives == 0.0);
  CHECK(p.correct_species == 100.0);

  AtomList moved = truth;
  moved[4].x += 3 * 0.5;
  moved[4].y += 4 * 0.5;
  const double e = std::sqrt(1.5 * 1.5 + 2.0 * 2.0);
  CHECK(e == doctest::Approx(2.5));
  const TraceReport d = score(moved, truth, 1.0);
  CHECK(d.matched == 9);
  CHECK(d.atoms_found == doctest::Approx(90.0));
  CHECK(d.false_positives == doctest::Approx(10.0));

  AtomList jitter = truth, shifted_truth = truth;
  for (std::size_t i = 0; i < jitter.size(); ++i) jitter[i].z += 0.01 * static_cast<double>(i);
  AtomList shifted_jitter = jitter;
  for (auto* list : {&shifted_truth, &shifted_jitter})
    for (auto& a : *list) {
      a.x += 7.3;
      a.z -= 2.1;
    }
  const TraceReport r1 = score(jitter, truth), r2 = score(shifted_jitter, shifted_truth);
  REQUIRE(r1.errors_pm.size() == r2.errors_pm.size());
  for (std::size_t i = 0; i < r1.errors_pm.size(); ++i) CHECK(r1.errors_pm[i] == doctest::Approx(r2.errors_pm[i]).epsilon(1e-9));
  CHECK(score(truth, jitter).matched == r1.matched);

  // Greedy takes the closest pair first; the optimal mode recovers both matches.
  AtomList t2{{0.0, 0, 0, Species::Heavy, 1, 1}, {1.2, 0, 0, Species::Heavy, 1, 1}};
  AtomList s2{{0.7, 0, 0, Species::Heavy, 1, 1}, {-0.5, 0, 0, Species::Heavy, 1, 1}};
  CHECK(score(s2, t2, 1.0, MatchMode::Greedy).matched == 2);
  AtomList t3{{0.0, 0, 0, Species::Heavy, 1, 1}, {1.5, 0, 0, Species::Heavy, 1, 1}};
  AtomList s3{{0.6, 0, 0, Species::Heavy, 1, 1}, {-0.9, 0, 0, Species::Heavy, 1, 1}};
  CHECK(score(s3, t3, 1.0, MatchMode::Greedy).matched == 1);
  CHECK(score(s3, t3, 1.0, MatchMode::Optimal).matched == 2);

  CHECK_THROWS_AS(score(truth, {}), ConfigError);
}

TEST_CASE("tetrahedra") {
  const double b = 1.6, s = b / std::sqrt(3.0);
  AtomList t{{5, 5, 5, Species::Heavy, 1, 1},
             {5 + s, 5 + s, 5 + s, Species::Light, 1, 1},
             {5 + s, 5 - s, 5 - s, Species::Light, 1, 1},
             {5 - s, 5 + s, 5 - s, Species::Light, 1, 1},
             {5 - s, 5 - s, 5 + s, Species::Light, 1, 1}};
  const auto found = find_tetrahedra(t);
  REQUIRE(found.size() == 1);
  CHECK(found[0].centre == 0);
  CHECK(find_tetrahedra({{0, 0, 0, Species::Heavy, 1, 1}}).empty());
  AtomList far = t;
  const double k = 2.1 / 1.6;
  far[4] = {5 - s * k, 5 - s * k, 5 + s * k, Species::Light, 1, 1};
  CHECK(find_tetrahedra(far).empty());
  CHECK(1.6 + 0.375 == doctest::Approx(1.975));
}
