#pragma once

#include <string>
#include <vector>

#include "pcaet/forward_model.hpp"
#include "pcaet/volume.hpp"

namespace pcaet {

/// Little-endian float32 samples, x fastest, plus `<path>.json` holding
/// {nx, ny, nz, pitch_angstrom, units}.
void write_volume(const std::string& raw_path, const PotentialVolume& v,
                  const std::string& units = "V*A per slice");
PotentialVolume read_volume(const std::string& raw_path);

/// One img_tIIII_fJJ.raw (float32 counts) per image plus manifest.json.
void write_tilt_series(const std::string& dir, const TiltSeries& s, bool anti_alias);
TiltSeries read_tilt_series(const std::string& dir, bool* anti_alias = nullptr);

/// Binary PGM of the z slice at `z`, grey = √(V/pitch) mapped linearly from 0–√80 V.
void write_slice_pgm(const std::string& path, const PotentialVolume& v, int z,
                     double max_volts = 80.0);

/// Two-column histogram CSV "bin_centre,count" with `bins` equal bins over [lo, hi].
void write_histogram_csv(const std::string& path, const std::vector<double>& values, int bins,
                         double lo, double hi, const std::string& label);

}  // namespace pcaet
