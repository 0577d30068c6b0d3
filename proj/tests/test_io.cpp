#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pcaet/io.hpp"
#include "test_util.hpp"

using namespace pcaet;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("pcaet_io_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("volume round trip through float32") {
  const fs::path d = scratch_dir("vol");
  const auto v = testutil::random_volume(7, 5, 3, 0.5, 9, -20.0, 80.0);
  const std::string path = (d / "v.raw").string();
  write_volume(path, v);
  CHECK(fs::file_size(path) == v.size() * 4);
  const auto back = read_volume(path);
  REQUIRE(back.same_shape(v));
  CHECK(back.pitch == 0.5);
  for (std::size_t i = 0; i < v.size(); ++i)
    CHECK(back.values[i] == static_cast<double>(static_cast<float>(v.values[i])));

  // truncated payload
  fs::resize_file(path, v.size() * 4 - 4);
  CHECK_THROWS_AS(read_volume(path), ConfigError);
  CHECK_THROWS_AS(read_volume((d / "missing.raw").string()), ConfigError);
  fs::remove_all(d);
}

TEST_CASE("tilt series round trip, finite and infinite dose") {
  const GridSpec g(8, 6, 0.5, 0.019687);
  for (std::optional<double> dose : {std::optional<double>(5e4), std::optional<double>()}) {
    const fs::path d = scratch_dir("series");
    TiltSeries s;
    s.grid = g;
    s.plan = {{-30.0, 0.0, 30.0}, {250.0, 1000.0}, dose, 77};
    for (std::size_t k = 0; k < 6; ++k) {
      Image im(g.nx, g.ny);
      const auto vals = testutil::random_real(im.values.size(), k, 0.0, 50.0);
      for (std::size_t p = 0; p < vals.size(); ++p)
        im.values[p] = dose ? std::floor(vals[p]) : vals[p] / 50.0 + 0.5;
      s.images.push_back(im);
    }
    write_tilt_series(d.string(), s, false);
    CHECK(fs::exists(d / "img_t0002_f01.raw"));
    bool aa = true;
    const TiltSeries back = read_tilt_series(d.string(), &aa);
    CHECK_FALSE(aa);
    CHECK(back.grid.nx == 8);
    CHECK(back.grid.ny == 6);
    CHECK(back.plan.tilt_angles == s.plan.tilt_angles);
    CHECK(back.plan.defoci == s.plan.defoci);
    CHECK(back.plan.total_dose == s.plan.total_dose);
    CHECK(back.plan.seed == 77);
    REQUIRE(back.images.size() == 6);
    for (std::size_t k = 0; k < 6; ++k)
      for (std::size_t p = 0; p < s.images[k].values.size(); ++p)
        CHECK(back.images[k].values[p] == static_cast<double>(static_cast<float>(s.images[k].values[p])));
    fs::remove(d / "img_t0001_f00.raw");
    CHECK_THROWS_AS(read_tilt_series(d.string()), ConfigError);
    fs::remove_all(d);
  }
}

TEST_CASE("PGM slice and histogram CSV") {
  const fs::path d = scratch_dir("pgm");
  PotentialVolume v(4, 3, 2, 0.5);
  v(1, 1, 1) = 40.0;  // 80 V after dividing by the pitch: full white
  v(2, 1, 1) = 10.0;
  write_slice_pgm((d / "s.pgm").string(), v, 1);
  std::ifstream in(d / "s.pgm", std::ios::binary);
  std::string magic;
  int w, h, maxv;
  in >> magic >> w >> h >> maxv;
  in.get();
  CHECK(magic == "P5");
  CHECK(w == 4);
  CHECK(h == 3);
  std::vector<unsigned char> px(12);
  in.read(reinterpret_cast<char*>(px.data()), 12);
  CHECK(int(px[0]) == 0);
  CHECK(int(px[5]) == maxv);
  CHECK(int(px[6]) == int(std::lround(maxv * std::sqrt(20.0 / 80.0))));
  CHECK_THROWS_AS(write_slice_pgm((d / "bad.pgm").string(), v, 2), ConfigError);

  write_histogram_csv((d / "h.csv").string(), {0.5, 1.5, 1.6, 3.9, 7.0}, 4, 0.0, 4.0, "intensity");
  std::ifstream hc(d / "h.csv");
  std::stringstream ss;
  ss << hc.rdbuf();
  const std::string text = ss.str();
  CHECK(text.find("count") != std::string::npos);
  int lines = 0;
  for (char c : text) lines += c == '\n';
  CHECK(lines == 5);
  fs::remove_all(d);
}
