#include "pcaet/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "pcaet/rng.hpp"

namespace pcaet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_f32(const std::string& path, const std::vector<double>& values) {
  std::vector<unsigned char> bytes(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto u = std::bit_cast<std::uint32_t>(static_cast<float>(values[i]));
    for (int b = 0; b < 4; ++b) bytes[4 * i + b] = static_cast<unsigned char>(u >> (8 * b));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<double> read_f32(const std::string& path, std::size_t count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() != count * 4)
    throw ConfigError(path + ": expected " + std::to_string(count * 4) + " bytes, found " +
                      std::to_string(bytes.size()));
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t u = 0;
    for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(bytes[4 * i + b]) << (8 * b);
    values[i] = std::bit_cast<float>(u);
  }
  return values;
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << j.dump(2) << '\n';
}

std::string image_name(std::size_t i, std::size_t j) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "img_t%04zu_f%02zu.raw", i, j);
  return buf;
}

}  // namespace

void write_volume(const std::string& raw_path, const PotentialVolume& v, const std::string& units) {
  write_f32(raw_path, v.values);
  write_json(raw_path + ".json", {{"nx", v.nx}, {"ny", v.ny}, {"nz", v.nz},
                                  {"pitch_angstrom", v.pitch}, {"units", units}});
}

PotentialVolume read_volume(const std::string& raw_path) {
  const json meta = read_json(raw_path + ".json");
  try {
    PotentialVolume v(meta.at("nx").get<int>(), meta.at("ny").get<int>(), meta.at("nz").get<int>(),
                      meta.at("pitch_angstrom").get<double>());
    v.values = read_f32(raw_path, v.size());
    return v;
  } catch (const json::exception& e) {
    throw ConfigError(raw_path + ".json: " + e.what());
  }
}

void write_tilt_series(const std::string& dir, const TiltSeries& s, bool anti_alias) {
  s.validate();
  fs::create_directories(dir);
  json m;
  m["nx"] = s.grid.nx;
  m["ny"] = s.grid.ny;
  m["pitch_angstrom"] = s.grid.pitch;
  m["lambda_angstrom"] = s.grid.lambda;
  m["accel_voltage_kv"] = s.accel_voltage_kv;
  m["tilt_angles_deg"] = s.plan.tilt_angles;
  m["defoci_angstrom"] = s.plan.defoci;
  if (s.plan.total_dose)
    m["total_dose_e_per_A2"] = *s.plan.total_dose;
  else
    m["total_dose_e_per_A2"] = "infinite";
  m["seed"] = s.plan.seed;
  m["rng_algorithm"] = std::string(kRngAlgorithm);
  m["anti_alias"] = anti_alias;
  json files = json::array();
  for (std::size_t i = 0; i < s.plan.tilt_angles.size(); ++i)
    for (std::size_t j = 0; j < s.plan.defoci.size(); ++j) {
      const std::string name = image_name(i, j);
      write_f32((fs::path(dir) / name).string(), s.image(i, j).values);
      files.push_back(name);
    }
  m["images"] = files;
  write_json((fs::path(dir) / "manifest.json").string(), m);
}

TiltSeries read_tilt_series(const std::string& dir, bool* anti_alias) {
  const std::string mpath = (fs::path(dir) / "manifest.json").string();
  const json m = read_json(mpath);
  try {
    TiltSeries s{.plan = {},
                 .grid = GridSpec(m.at("nx").get<int>(), m.at("ny").get<int>(),
                                  m.at("pitch_angstrom").get<double>(),
                                  m.at("lambda_angstrom").get<double>()),
                 .accel_voltage_kv = m.value("accel_voltage_kv", 300.0),
                 .images = {}};
    s.plan.tilt_angles = m.at("tilt_angles_deg").get<std::vector<double>>();
    s.plan.defoci = m.at("defoci_angstrom").get<std::vector<double>>();
    const json& dose = m.at("total_dose_e_per_A2");
    if (dose.is_string()) {
      if (dose.get<std::string>() != "infinite") throw ConfigError(mpath + ": bad total_dose");
    } else {
      s.plan.total_dose = dose.get<double>();
    }
    s.plan.seed = m.at("seed").get<std::uint64_t>();
    if (anti_alias) *anti_alias = m.value("anti_alias", true);
    for (std::size_t i = 0; i < s.plan.tilt_angles.size(); ++i)
      for (std::size_t j = 0; j < s.plan.defoci.size(); ++j) {
        Image img(s.grid.nx, s.grid.ny);
        img.values = read_f32((fs::path(dir) / image_name(i, j)).string(), s.grid.size());
        s.images.push_back(std::move(img));
      }
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(mpath + ": " + e.what());
  }
}

void write_slice_pgm(const std::string& path, const PotentialVolume& v, int z, double max_volts) {
  if (z < 0 || z >= v.nz) throw ConfigError("slice index out of range");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << "P5\n" << v.nx << ' ' << v.ny << "\n255\n";
  const double top = std::sqrt(max_volts);
  std::vector<unsigned char> row(static_cast<std::size_t>(v.nx));
  for (int y = 0; y < v.ny; ++y) {
    for (int x = 0; x < v.nx; ++x) {
      const double volts = std::max(0.0, v(x, y, z) / v.pitch);
      const double g = std::min(1.0, std::sqrt(volts) / top);
      row[x] = static_cast<unsigned char>(std::lround(255.0 * g));
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
}

void write_histogram_csv(const std::string& path, const std::vector<double>& values, int bins,
                         double lo, double hi, const std::string& label) {
  if (bins < 1 || !(hi > lo)) throw ConfigError("histogram needs bins >= 1 and hi > lo");
  std::vector<long> counts(static_cast<std::size_t>(bins), 0);
  const double w = (hi - lo) / bins;
  for (double x : values) {
    if (!(x >= lo && x <= hi)) continue;
    counts[std::min<std::size_t>(bins - 1, static_cast<std::size_t>((x - lo) / w))]++;
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << label << ",count\n";
  for (int b = 0; b < bins; ++b) out << lo + (b + 0.5) * w << ',' << counts[b] << '\n';
}

}  // namespace pcaet
