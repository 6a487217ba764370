#include "rbcav/io.hpp"

#include <json.hpp>

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

namespace rbcav::io {

using nlohmann::json;

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

void write_bytes(std::ofstream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void write_header(std::ofstream& os, const char* magic, const json& header) {
  const std::string h = header.dump();
  write_bytes(os, magic, std::strlen(magic));
  const std::uint32_t len = static_cast<std::uint32_t>(h.size());
  write_bytes(os, &len, 4);
  write_bytes(os, h.data(), h.size());
}

json read_header(std::ifstream& is, const char* magic) {
  const std::size_t mlen = std::strlen(magic);
  std::string m(mlen, '\0');
  is.read(m.data(), static_cast<std::streamsize>(mlen));
  if (!is || m != magic) throw Error("io: bad magic bytes");
  std::uint32_t len = 0;
  is.read(reinterpret_cast<char*>(&len), 4);
  std::string h(len, '\0');
  is.read(h.data(), len);
  if (!is) throw Error("io: truncated header");
  return json::parse(h);
}

void write_array(std::ofstream& os, const double* p, std::size_t n) {
  write_bytes(os, p, n * sizeof(double));
}

void read_array(std::ifstream& is, double* p, std::size_t n) {
  is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw Error("io: truncated array data");
}

json grid_json(const GridDesc& g) {
  return json{{"nx", g.nx}, {"ny", g.ny}, {"order", g.order}, {"nq1d", g.nq1d},
              {"ref_A", g.ref_A}};
}

GridDesc grid_from(const json& j) {
  GridDesc g;
  g.nx = j.at("nx");
  g.ny = j.at("ny");
  g.order = j.at("order");
  g.nq1d = j.at("nq1d");
  g.ref_A = j.at("ref_A");
  return g;
}

}  // namespace

void write_snapshot(const std::filesystem::path& path, const Field& field,
                    const SnapshotMeta& meta) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("write_snapshot: cannot open " + path.string());
  json header{
      {"mu", {{"A", meta.mu.A}, {"Gr", meta.mu.Gr}}},
      {"grid", grid_json(meta.grid)},
      {"kind", meta.kind},
      {"time", meta.time},
      {"domain", field.domain.reference ? "reference" : "physical"},
      {"layout",
       {{"field", field.kind == FieldKind::velocity ? "velocity" : "pressure"},
        {"components", field.kind == FieldKind::velocity ? 2 : 1},
        {"points", field.n_nodes()},
        {"order", "component-major"}}},
  };
  write_header(os, "RBSNAP1\n", header);
  write_array(os, field.coeffs.data(), static_cast<std::size_t>(field.coeffs.size()));
  if (!os) throw Error("write_snapshot: write failed");
}

std::pair<Field, SnapshotMeta> read_snapshot(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("read_snapshot: cannot open " + path.string());
  const json h = read_header(is, "RBSNAP1\n");

  SnapshotMeta meta;
  meta.mu = {h.at("mu").at("A"), h.at("mu").at("Gr")};
  meta.grid = grid_from(h.at("grid"));
  meta.kind = h.at("kind");
  meta.time = h.at("time");

  Field f;
  const auto& layout = h.at("layout");
  const int comps = layout.at("components");
  const int pts = layout.at("points");
  f.kind = (std::string(layout.at("field")) == "velocity") ? FieldKind::velocity
                                                           : FieldKind::pressure;
  f.domain = (std::string(h.at("domain")) == "reference") ? DomainTag::ref()
                                                          : DomainTag::physical(meta.mu.A);
  f.coeffs.resize(static_cast<Eigen::Index>(comps) * pts);
  read_array(is, f.coeffs.data(), static_cast<std::size_t>(f.coeffs.size()));
  return {std::move(f), meta};
}

void write_archive(const std::filesystem::path& path, const rom::ReducedBasis& basis,
                   const rom::ReducedOperators& ops) {
  if (ops.on_the_fly)
    throw Error("write_archive: materialize convection tensors before persisting");
  if (basis.size() != ops.N) throw Error("write_archive: basis/operator size mismatch");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("write_archive: cannot open " + path.string());

  const int nv = basis.grid->n_vnodes();
  json blocks = json::array();
  auto push_mat = [&](const char* group, const rom::MatBlock& b) {
    blocks.push_back({{"group", group},
                      {"name", b.name},
                      {"s_exp", b.theta.s_exp},
                      {"gr_pow", b.theta.gr_pow},
                      {"shape", {ops.N, ops.N}}});
  };
  for (const auto& b : ops.mass_blocks) push_mat("mass", b);
  for (const auto& b : ops.stiffness_blocks) push_mat("stiffness", b);
  for (const auto& b : ops.convection_blocks)
    blocks.push_back({{"group", "convection"},
                      {"name", b.name},
                      {"s_exp", b.theta.s_exp},
                      {"gr_pow", b.theta.gr_pow},
                      {"shape", {b.T.ni, b.T.nj, b.T.nk}}});
  for (const auto& b : ops.forcing_blocks)
    blocks.push_back({{"group", "forcing"},
                      {"name", b.name},
                      {"s_exp", b.theta.s_exp},
                      {"gr_pow", b.theta.gr_pow},
                      {"shape", {ops.N}}});

  json prov = json::array();
  for (const auto& p : basis.provenance)
    prov.push_back({{"A", p.mu.A}, {"Gr", p.mu.Gr}, {"time", p.time}, {"steady", p.steady}});

  const json header{
      {"grid", grid_json(GridDesc::of(*basis.grid))},
      {"n_modes", ops.N},
      {"mode_layout", {{"points", nv}, {"components", 2}}},
      {"provenance", prov},
      {"blocks", blocks},
  };
  write_header(os, "RBROM1\n", header);

  for (const auto& m : basis.modes)
    write_array(os, m.coeffs.data(), static_cast<std::size_t>(m.coeffs.size()));
  for (const auto& b : ops.mass_blocks)
    write_array(os, b.M.data(), static_cast<std::size_t>(b.M.size()));
  for (const auto& b : ops.stiffness_blocks)
    write_array(os, b.M.data(), static_cast<std::size_t>(b.M.size()));
  for (const auto& b : ops.convection_blocks) write_array(os, b.T.data.data(), b.T.data.size());
  for (const auto& b : ops.forcing_blocks)
    write_array(os, b.v.data(), static_cast<std::size_t>(b.v.size()));
  if (!os) throw Error("write_archive: write failed");
}

Archive read_archive(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("read_archive: cannot open " + path.string());
  const json h = read_header(is, "RBROM1\n");

  Archive out;
  out.grid = grid_from(h.at("grid"));
  auto grid = out.grid.make();
  out.basis.grid = grid;
  const int N = h.at("n_modes");
  const int nv = h.at("mode_layout").at("points");
  if (nv != grid->n_vnodes()) throw Error("read_archive: grid/mode layout mismatch");

  for (const auto& p : h.at("provenance")) {
    pod::SnapshotInfo info;
    info.mu = {p.at("A"), p.at("Gr")};
    info.time = p.at("time");
    info.steady = p.at("steady");
    out.basis.provenance.push_back(info);
  }
  if (static_cast<int>(out.basis.provenance.size()) != N)
    throw Error("read_archive: provenance length mismatch");

  for (int i = 0; i < N; ++i) {
    Field m;
    m.kind = FieldKind::velocity;
    m.domain = DomainTag::ref();
    m.coeffs.resize(2 * nv);
    read_array(is, m.coeffs.data(), static_cast<std::size_t>(2 * nv));
    out.basis.modes.push_back(std::move(m));
  }

  out.ops.N = N;
  out.ops.ref_A = out.grid.ref_A;
  for (const auto& b : h.at("blocks")) {
    const std::string group = b.at("group");
    const rom::ThetaDesc theta{b.at("s_exp"), b.at("gr_pow")};
    const std::string name = b.at("name");
    const auto shape = b.at("shape");
    if (group == "mass" || group == "stiffness") {
      Eigen::MatrixXd M(static_cast<int>(shape[0]), static_cast<int>(shape[1]));
      read_array(is, M.data(), static_cast<std::size_t>(M.size()));
      (group == "mass" ? out.ops.mass_blocks : out.ops.stiffness_blocks)
          .push_back({name, theta, std::move(M)});
    } else if (group == "convection") {
      kernels::Tensor3 T(static_cast<int>(shape[0]), static_cast<int>(shape[1]),
                         static_cast<int>(shape[2]));
      read_array(is, T.data.data(), T.data.size());
      out.ops.convection_blocks.push_back({name, theta, std::move(T)});
    } else if (group == "forcing") {
      Eigen::VectorXd v(static_cast<int>(shape[0]));
      read_array(is, v.data(), static_cast<std::size_t>(v.size()));
      out.ops.forcing_blocks.push_back({name, theta, std::move(v)});
    } else {
      throw Error("read_archive: unknown block group " + group);
    }
  }
  return out;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns)
    : path_(path.string()), n_cols_(columns.size()) {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) buffer_ += ',';
    buffer_ += columns[i];
  }
  buffer_ += '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != n_cols_) throw Error("csv: column count mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) buffer_ += ',';
    buffer_ += cells[i];
  }
  buffer_ += '\n';
}

void CsvWriter::close() {
  if (closed_) return;
  std::ofstream os(path_, std::ios::binary);
  if (!os) throw Error("csv: cannot open " + path_);
  os.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
  if (!os) throw Error("csv: write failed");
  closed_ = true;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("read_csv: cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace rbcav::io
