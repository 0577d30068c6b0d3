#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <string>
#include <sys/wait.h>

#include "pcaet/io.hpp"
#include "pcaet/phantom.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

#ifndef PCAET_CLI
#error "PCAET_CLI must name the command-line binary"
#endif

namespace {

const fs::path kRoot = fs::temp_directory_path() / "pcaet_cli_test";

int run(const std::string& args) {
  const std::string cmd = std::string(PCAET_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

fs::path write_config(const std::string& name, const json& j) {
  const fs::path p = kRoot / name;
  std::ofstream(p) << j.dump();
  return p;
}

std::string at(const std::string& sub) { return (kRoot / sub).string(); }

const json kGrid = {{"nx", 24}, {"ny", 24}, {"nz", 24}, {"pitch", 0.5}};

struct Setup {
  Setup() {
    fs::remove_all(kRoot);
    fs::create_directories(kRoot);
  }
};

}  // namespace

TEST_CASE("command-line pipeline") {
  Setup setup;
  const auto phantom_cfg = write_config(
      "phantom.json", {{"seed", 5}, {"grid", kGrid}, {"phantom", {{"radius", 5.0}, {"vacancy_fraction", 0.05}}}});

  SUBCASE("phantom is reproducible and honours the vacancy fraction") {
    REQUIRE(run("phantom --config " + phantom_cfg.string() + " --out " + at("ph")) == 0);
    REQUIRE(run("phantom --config " + phantom_cfg.string() + " --out " + at("ph2")) == 0);
    for (const char* f : {"volume.raw", "atoms.csv", "manifest.json", "vacancies.csv"})
      CHECK(slurp(kRoot / "ph" / f) == slurp(kRoot / "ph2" / f));
    const json m = read_json(kRoot / "ph" / "manifest.json");
    const std::size_t atoms = m["results"]["atoms"], vac = m["results"]["vacancies"];
    CHECK(vac == static_cast<std::size_t>(std::nearbyint(0.05 * static_cast<double>(atoms + vac))));
    CHECK(pcaet::read_atoms_csv(at("ph/atoms.csv")).size() == atoms);
    CHECK(pcaet::read_volume(at("ph/volume.raw")).nx == 24);
    CHECK(fs::exists(kRoot / "ph" / "slice_z012.pgm"));
    // every default is recorded, and the manifest alone reproduces the run
    CHECK(m["config"]["tracing"]["merge_distance"] == 2.25);
    REQUIRE(run("phantom --config " + at("ph/manifest.json") + " --out " + at("ph3")) == 0);
    CHECK(slurp(kRoot / "ph" / "volume.raw") == slurp(kRoot / "ph3" / "volume.raw"));
    // a different seed moves the jittered lattice
    REQUIRE(run("phantom --config " + phantom_cfg.string() + " --seed 6 --out " + at("ph4")) == 0);
    CHECK(slurp(kRoot / "ph" / "volume.raw") != slurp(kRoot / "ph4" / "volume.raw"));
  }

  SUBCASE("simulate: uniform angles, missing wedge, manifest matches images") {
    const auto cfg = write_config("sim.json", {{"grid", kGrid},
                                               {"acquisition", {{"n_tilts", 60}, {"defoci", {300.0}}}}});
    REQUIRE(run("simulate --config " + cfg.string() + " --out " + at("sim")) == 0);
    const json m = read_json(kRoot / "sim" / "series" / "manifest.json");
    REQUIRE(m["tilt_angles_deg"].size() == 60);
    for (int k = 0; k < 60; ++k) CHECK(m["tilt_angles_deg"][k].get<double>() == doctest::Approx(-90.0 + 3.0 * k));
    std::size_t images = 0;
    for (const auto& e : fs::directory_iterator(kRoot / "sim" / "series"))
      if (e.path().extension() == ".raw") {
        ++images;
        CHECK(fs::file_size(e.path()) == 24u * 24u * 4u);
      }
    CHECK(images == 60);

    const auto wedge = write_config(
        "wedge.json", {{"grid", kGrid}, {"acquisition", {{"n_tilts", 20}, {"tilt_span_deg", 120.0}}}});
    REQUIRE(run("simulate --config " + wedge.string() + " --out " + at("wedge")) == 0);
    for (const auto& a : read_json(kRoot / "wedge" / "series" / "manifest.json")["tilt_angles_deg"])
      CHECK(std::abs(a.get<double>()) <= 60.0);
  }

  SUBCASE("reconstruct, trace, evaluate") {
    REQUIRE(run("phantom --config " + phantom_cfg.string() + " --out " + at("ph")) == 0);
    const auto sim = write_config(
        "sim.json", {{"grid", kGrid},
                     {"acquisition", {{"n_tilts", 8}, {"total_dose", "infinite"}}},
                     {"inputs", {{"phantom", at("ph")}}}});
    REQUIRE(run("simulate --config " + sim.string() + " --out " + at("sim")) == 0);
    const json sm = read_json(kRoot / "sim" / "series" / "manifest.json");
    CHECK(sm["total_dose_e_per_A2"] == "infinite");

    const auto rec = write_config(
        "rec.json", {{"grid", kGrid},
                     {"solver", {{"max_iter", 4}, {"reg_weights", {0.0, 1e-5, 1e-4}}}},
                     {"inputs", {{"series", at("sim/series")}}}});
    REQUIRE(run("reconstruct --config " + rec.string() + " --out " + at("rec") + " --threads 2") == 0);
    std::size_t volumes = 0;
    for (const auto& e : fs::recursive_directory_iterator(kRoot / "rec"))
      volumes += e.path().filename() == "volume.raw";
    CHECK(volumes == 3);
    std::ifstream cost(kRoot / "rec" / "reg_01" / "cost.csv");
    std::string line;
    int rows = -1;
    while (std::getline(cost, line)) ++rows;
    CHECK(rows == 4);

    // bit-identical rerun
    REQUIRE(run("reconstruct --config " + rec.string() + " --out " + at("rec2") + " --threads 2") == 0);
    CHECK(slurp(kRoot / "rec" / "reg_02" / "volume.raw") == slurp(kRoot / "rec2" / "reg_02" / "volume.raw"));

    const auto tr = write_config("tr.json", {{"inputs", {{"volume", at("ph/volume.raw")}}}});
    REQUIRE(run("trace --config " + tr.string() + " --out " + at("tr")) == 0);
    CHECK(fs::exists(kRoot / "tr" / "intensity_histogram.csv"));
    const auto ev = write_config(
        "ev.json", {{"inputs", {{"traced", at("tr/traced.csv")}, {"truth", at("ph/atoms.csv")}}}});
    REQUIRE(run("evaluate --config " + ev.string() + " --out " + at("ev")) == 0);
    const json r = read_json(kRoot / "ev" / "report.json");
    CHECK(r["atoms_found_percent"] == 100.0);
    CHECK(r["false_positives_percent"] == 0.0);
    CHECK(fs::exists(kRoot / "ev" / "position_error_histogram.csv"));

    // input flags stand in for the inputs section
    REQUIRE(run("trace --volume " + at("ph/volume.raw") + " --out " + at("tr_flag")) == 0);
    CHECK(slurp(kRoot / "tr" / "traced.csv") == slurp(kRoot / "tr_flag" / "traced.csv"));
    REQUIRE(run("evaluate --traced " + at("ph/atoms.csv") + " --truth " + at("ph/atoms.csv") +
                " --out " + at("ev_flag")) == 0);
    CHECK(read_json(kRoot / "ev_flag" / "report.json")["position_error_mean_pm"] == 0.0);

    const auto self = write_config(
        "self.json", {{"inputs", {{"traced", at("ph/atoms.csv")}, {"truth", at("ph/atoms.csv")}}}});
    REQUIRE(run("evaluate --config " + self.string() + " --out " + at("self")) == 0);
    const json p = read_json(kRoot / "self" / "report.json");
    CHECK(p["position_error_mean_pm"] == 0.0);
    CHECK(p["correct_species_percent"] == 100.0);

    // a step far above the bracket trips the divergence guard
    const auto div = write_config(
        "div.json", {{"grid", kGrid},
                     {"solver", {{"max_iter", 20}, {"reg_kind", "positivity"}, {"step_size", 1.5e5}}},
                     {"inputs", {{"series", at("sim/series")}}}});
    CHECK(run("reconstruct --config " + div.string() + " --out " + at("div")) == 3);
  }

  SUBCASE("configuration errors exit with 2") {
    CHECK(run("phantom --config " + write_config("bad.json", {{"solver", {{"bogus", 1}}}}).string()) == 2);
    CHECK(run("phantom --config " + write_config("bad2.json", {{"colour", "red"}}).string()) == 2);
    CHECK(run("phantom --config " + at("missing.json")) == 2);
    CHECK(run("phantom --seed nope") == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("reconstruct --out " + at("nothing")) == 2);
    CHECK(run("simulate --config " +
              write_config("bad3.json", {{"acquisition", {{"total_dose", "lots"}}}}).string()) == 2);
  }
}
