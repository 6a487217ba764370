#pragma once

#include "rbcav/rom.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace rbcav::io {

/// Shortest round-trip decimal form of a double (locale-free).
std::string fmt(double v);

struct GridDesc {
  int nx = 0, ny = 0, order = 0, nq1d = 0;
  double ref_A = 2.0;

  static GridDesc of(const Grid& g) { return {g.nx, g.ny, g.order, g.nq1d, g.ref_A}; }
  bool operator==(const GridDesc& o) const = default;
  std::shared_ptr<const Grid> make() const { return Grid::make(nx, ny, order, ref_A, nq1d); }
};

struct SnapshotMeta {
  ParameterPoint mu;
  GridDesc grid;
  std::string kind = "steady";  // steady | transient
  double time = 0.0;
};

/// Snapshot container: magic "RBSNAP1\n", little-endian u32 header length,
/// UTF-8 JSON header, raw little-endian float64 coefficients.
void write_snapshot(const std::filesystem::path& path, const Field& field,
                    const SnapshotMeta& meta);
std::pair<Field, SnapshotMeta> read_snapshot(const std::filesystem::path& path);

/// Reduced-model archive: magic "RBROM1\n", same header convention, then the
/// mode array and every θ-block array in header order.
void write_archive(const std::filesystem::path& path, const rom::ReducedBasis& basis,
                   const rom::ReducedOperators& ops);

struct Archive {
  rom::ReducedBasis basis;
  rom::ReducedOperators ops;
  GridDesc grid;
};
Archive read_archive(const std::filesystem::path& path);

/// Line-oriented CSV with a declared header row and stable column order.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns);
  void row(const std::vector<std::string>& cells);
  void close();

 private:
  std::string path_;
  std::string buffer_;
  std::size_t n_cols_;
  bool closed_ = false;
};

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

}  // namespace rbcav::io
