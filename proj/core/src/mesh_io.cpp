#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "shaperate/error.hpp"
#include "shaperate/mesh.hpp"

namespace shaperate::mesh {
namespace {

constexpr std::string_view kHeader = "tri-mesh v1";

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next line split into whitespace tokens; blank lines are skipped.
  std::vector<std::string> next(const char* what) {
    std::string line;
    while (std::getline(in_, line)) {
      ++number_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      std::istringstream ss(line);
      std::vector<std::string> tokens;
      for (std::string tok; ss >> tok;) tokens.push_back(tok);
      if (!tokens.empty()) return tokens;
    }
    error(std::string("unexpected end of file, expected ") + what);
  }

  std::optional<std::vector<std::string>> maybe_next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++number_;
      std::istringstream ss(line);
      std::vector<std::string> tokens;
      for (std::string tok; ss >> tok;) tokens.push_back(tok);
      if (!tokens.empty()) return tokens;
    }
    return std::nullopt;
  }

  [[noreturn]] void error(const std::string& message) const {
    fail(ErrorKind::kParse, "mesh file line " + std::to_string(number_) + ": " + message);
  }

  double real(const std::string& tok) const {
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size() || errno == ERANGE) error("invalid number '" + tok + "'");
    return v;
  }

  long integer(const std::string& tok) const {
    long v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) error("invalid integer '" + tok + "'");
    return v;
  }

  int index(const std::string& tok, long count, const char* what) const {
    const long v = integer(tok);
    if (v < 0 || v >= count) error(std::string(what) + " index " + tok + " out of range");
    return static_cast<int>(v);
  }

 private:
  std::istream& in_;
  int number_ = 0;
};

}  // namespace

void write_mesh(const TriMesh& mesh, std::ostream& out) {
  out << kHeader << '\n';
  out << mesh.node_count() << ' ' << mesh.triangle_count() << ' ' << mesh.boundary_edges().size()
      << '\n';
  for (const auto& p : mesh.nodes()) out << format_real(p.x()) << ' ' << format_real(p.y()) << '\n';
  for (const auto& t : mesh.triangles()) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  for (const auto& e : mesh.boundary_edges()) {
    out << e.nodes[0] << ' ' << e.nodes[1] << ' ' << to_string(e.tag) << '\n';
  }
  if (mesh.crack_tip()) out << "tip " << *mesh.crack_tip() << '\n';
}

void write_mesh(const TriMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kParse, "cannot open " + path.string() + " for writing");
  write_mesh(mesh, out);
  if (!out) fail(ErrorKind::kParse, "failed writing " + path.string());
}

TriMesh read_mesh(std::istream& in) {
  LineReader reader(in);
  const auto header = reader.next("header");
  if (header.size() != 2 || header[0] + " " + header[1] != kHeader) {
    reader.error("expected header 'tri-mesh v1'");
  }
  const auto counts = reader.next("counts");
  if (counts.size() != 3) reader.error("expected '<n_nodes> <n_triangles> <n_boundary_edges>'");
  const long n_nodes = reader.integer(counts[0]);
  const long n_tris = reader.integer(counts[1]);
  const long n_edges = reader.integer(counts[2]);
  if (n_nodes < 0 || n_tris < 0 || n_edges < 0) reader.error("negative count");

  std::vector<Point> nodes;
  nodes.reserve(static_cast<std::size_t>(n_nodes));
  for (long i = 0; i < n_nodes; ++i) {
    const auto tok = reader.next("node coordinates");
    if (tok.size() != 2) reader.error("expected 'x y'");
    nodes.emplace_back(reader.real(tok[0]), reader.real(tok[1]));
  }

  std::vector<Triangle> tris;
  tris.reserve(static_cast<std::size_t>(n_tris));
  for (long i = 0; i < n_tris; ++i) {
    const auto tok = reader.next("triangle");
    if (tok.size() != 3) reader.error("expected 'i j k'");
    tris.push_back({reader.index(tok[0], n_nodes, "node"), reader.index(tok[1], n_nodes, "node"),
                    reader.index(tok[2], n_nodes, "node")});
  }

  std::vector<BoundaryEdge> edges;
  edges.reserve(static_cast<std::size_t>(n_edges));
  for (long i = 0; i < n_edges; ++i) {
    const auto tok = reader.next("boundary edge");
    if (tok.size() != 3) reader.error("expected 'i j <tag>'");
    const auto tag = parse_tag(tok[2]);
    if (!tag) reader.error("unknown boundary tag '" + tok[2] + "'");
    edges.push_back({{reader.index(tok[0], n_nodes, "node"), reader.index(tok[1], n_nodes, "node")},
                     *tag});
  }

  std::optional<int> tip;
  if (auto tok = reader.maybe_next()) {
    if (tok->size() != 2 || (*tok)[0] != "tip") reader.error("expected 'tip <node_index>'");
    tip = reader.index((*tok)[1], n_nodes, "tip");
    if (reader.maybe_next()) reader.error("trailing content after tip line");
  }
  return TriMesh(std::move(nodes), std::move(tris), std::move(edges), tip);
}

TriMesh read_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kParse, "cannot open mesh file " + path.string());
  return read_mesh(in);
}

}  // namespace shaperate::mesh
