#include "config.hpp"

#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "shaperate/error.hpp"

namespace shaperate::cli {
namespace {

using nlohmann::json;

// Name and numeric arguments of `name(a,b,...)`.
struct CallSpec {
  std::string name;
  std::vector<double> args;
};

CallSpec parse_call(const std::string& text, const std::string& where) {
  CallSpec spec;
  const auto open = text.find('(');
  auto trim = [](std::string s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    return s.substr(i);
  };
  if (open == std::string::npos) {
    spec.name = trim(text);
    return spec;
  }
  if (text.back() != ')') throw ConfigError(where + ": unbalanced parentheses in '" + text + "'");
  spec.name = trim(text.substr(0, open));
  std::stringstream inner(text.substr(open + 1, text.size() - open - 2));
  for (std::string item; std::getline(inner, item, ',');) {
    item = trim(item);
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw ConfigError(where + ": bad numeric argument '" + item + "'");
    spec.args.push_back(v);
  }
  return spec;
}

void expect_args(const CallSpec& spec, std::size_t n, const std::string& where) {
  if (spec.args.size() != n) {
    throw ConfigError(where + ": '" + spec.name + "' takes " + std::to_string(n) + " arguments");
  }
}

const json& require(const json& node, const char* key, const std::string& path) {
  if (!node.contains(key)) throw ConfigError(path + "." + key + ": missing required key");
  return node.at(key);
}

template <class T>
T get(const json& node, const std::string& path) {
  try {
    return node.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

template <class T>
T get_or(const json& node, const char* key, T fallback, const std::string& path) {
  if (!node.contains(key)) return fallback;
  return get<T>(node.at(key), path + "." + key);
}

Point get_point(const json& node, const std::string& path) {
  const auto v = get<std::vector<double>>(node, path);
  if (v.size() != 2) throw ConfigError(path + ": expected [x, y]");
  return Point(v[0], v[1]);
}

std::pair<double, double> get_range(const json& node, const std::string& path) {
  const auto v = get<std::vector<double>>(node, path);
  if (v.size() != 2) throw ConfigError(path + ": expected [lo, hi]");
  return {v[0], v[1]};
}

void check_known_keys(const json& node, std::initializer_list<const char*> keys,
                      const std::string& path) {
  for (const auto& [k, _] : node.items()) {
    bool known = false;
    for (const char* allowed : keys) known = known || k == allowed;
    if (!known) throw ConfigError(path + "." + k + ": unknown key");
  }
}

MeshSource parse_mesh(const json& node, const std::filesystem::path& base_dir) {
  const std::string path = "mesh";
  if (!node.is_object()) throw ConfigError(path + ": expected an object");
  check_known_keys(node, {"file", "x", "y", "nx", "ny", "dirichlet", "all_neumann", "crack"}, path);
  MeshSource src;
  if (node.contains("file")) {
    std::filesystem::path p = get<std::string>(node.at("file"), path + ".file");
    src.file = p.is_absolute() ? p : base_dir / p;
    return src;
  }
  if (node.contains("x")) src.x_range = get_range(node.at("x"), path + ".x");
  if (node.contains("y")) src.y_range = get_range(node.at("y"), path + ".y");
  src.nx = get_or<int>(node, "nx", src.nx, path);
  src.ny = get_or<int>(node, "ny", src.ny, path);
  if (src.nx < 1 || src.ny < 1) throw ConfigError(path + ".nx: mesh divisions must be >= 1");
  if (node.contains("dirichlet")) {
    src.dirichlet = 0;
    static const std::map<std::string, mesh::Side> kSides{
        {"left", mesh::kLeft}, {"right", mesh::kRight}, {"bottom", mesh::kBottom}, {"top", mesh::kTop}};
    for (const auto& side : get<std::vector<std::string>>(node.at("dirichlet"), path + ".dirichlet")) {
      const auto it = kSides.find(side);
      if (it == kSides.end()) throw ConfigError(path + ".dirichlet: unknown side '" + side + "'");
      src.dirichlet |= it->second;
    }
  }
  src.allow_all_neumann = get_or<bool>(node, "all_neumann", false, path);
  if (node.contains("crack")) {
    const auto& crack = node.at("crack");
    src.crack = {get_point(require(crack, "mouth", path + ".crack"), path + ".crack.mouth"),
                 get_point(require(crack, "tip", path + ".crack"), path + ".crack.tip")};
  }
  return src;
}

deformation::VelocityField velocity_from_json(const json& node, const std::string& path) {
  if (node.is_string()) {
    try {
      return parse_velocity(node.get<std::string>());
    } catch (const ConfigError& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
  throw ConfigError(path + ": expected a velocity spelling such as \"stretch_x\"");
}

}  // namespace

deformation::VelocityField parse_velocity(const std::string& text) {
  const auto spec = parse_call(text, "velocity");
  const auto& a = spec.args;
  if (spec.name == "translate") {
    expect_args(spec, 2, "velocity");
    return deformation::translate(a[0], a[1]);
  }
  if (spec.name == "stretch_x") {
    expect_args(spec, 0, "velocity");
    return deformation::stretch_x();
  }
  if (spec.name == "rotate") {
    if (a.empty()) return deformation::rotate();
    expect_args(spec, 2, "velocity");
    return deformation::rotate(Point(a[0], a[1]));
  }
  if (spec.name == "crack_extension") {
    expect_args(spec, 6, "velocity");
    return deformation::crack_extension_field(Point(a[0], a[1]), Vec2(a[2], a[3]).normalized(),
                                              a[4], a[5]);
  }
  if (spec.name == "bump") {
    expect_args(spec, 6, "velocity");
    return deformation::bump(Box{Point(a[0], a[2]), Point(a[1], a[3])}, Vec2(a[4], a[5]));
  }
  throw ConfigError("velocity: unknown field '" + spec.name + "'");
}

fem::CoefficientSet parse_coefficients(const std::string& text) {
  const auto spec = parse_call(text, "coefficients");
  const auto& a = spec.args;
  if (spec.name == "poisson_manufactured") {
    expect_args(spec, 0, "coefficients");
    return fem::poisson_manufactured();
  }
  if (spec.name == "constant") {
    expect_args(spec, 5, "coefficients");
    return fem::constant(a[0], a[1], a[2], a[3], a[4]);
  }
  if (spec.name == "mode3_crack") {
    if (a.empty()) return fem::mode3_crack(Point::Zero(), Vec2(1.0, 0.0));
    expect_args(spec, 4, "coefficients");
    return fem::mode3_crack(Point(a[0], a[1]), Vec2(a[2], a[3]).normalized());
  }
  throw ConfigError("coefficients: unknown set '" + spec.name + "'");
}

RunConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config: top level must be an object");
  check_known_keys(root,
                   {"mesh", "coefficients", "velocity", "velocities", "refinements", "solver",
                    "sampling", "boundary_formula", "jint", "grate", "verify", "abstract"},
                   "config");

  RunConfig cfg;
  if (root.contains("mesh")) cfg.mesh = parse_mesh(root.at("mesh"), base_dir);

  const std::string coeff = get_or<std::string>(root, "coefficients", "poisson_manufactured", "config");
  try {
    cfg.coefficients = parse_coefficients(coeff);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config.coefficients: ") + e.what());
  } catch (const Error& e) {
    throw ConfigError(std::string("config.coefficients: ") + e.what());
  }

  try {
    if (root.contains("velocity")) {
      cfg.velocities.push_back(velocity_from_json(root.at("velocity"), "config.velocity"));
    }
    if (root.contains("velocities")) {
      const auto& list = root.at("velocities");
      if (!list.is_array()) throw ConfigError("config.velocities: expected an array");
      for (std::size_t i = 0; i < list.size(); ++i) {
        cfg.velocities.push_back(
            velocity_from_json(list[i], "config.velocities[" + std::to_string(i) + "]"));
      }
    }
  } catch (const Error& e) {
    throw ConfigError(std::string("config.velocity: ") + e.what());
  }

  if (root.contains("refinements")) {
    cfg.refinements = get<std::vector<int>>(root.at("refinements"), "config.refinements");
    for (int n : cfg.refinements) {
      if (n < 1) throw ConfigError("config.refinements: levels must be >= 1");
    }
    if (cfg.mesh.file && !cfg.refinements.empty()) {
      throw ConfigError("config.refinements: not available for meshes read from a file");
    }
  }

  if (root.contains("solver")) {
    cfg.solver_tol = get_or<double>(root.at("solver"), "tol", cfg.solver_tol, "config.solver");
    if (!(cfg.solver_tol > 0.0)) throw ConfigError("config.solver.tol: must be positive");
  }
  if (root.contains("sampling")) {
    const auto s = get<std::string>(root.at("sampling"), "config.sampling");
    if (s == "interpolated") {
      cfg.sampling = shape::VelocitySampling::kInterpolated;
    } else if (s == "analytic") {
      cfg.sampling = shape::VelocitySampling::kAnalytic;
    } else {
      throw ConfigError("config.sampling: expected 'interpolated' or 'analytic'");
    }
  }
  cfg.boundary_formula = get_or<bool>(root, "boundary_formula", false, "config");

  if (root.contains("jint")) {
    const auto& j = root.at("jint");
    const std::string p = "config.jint";
    check_known_keys(j, {"center", "radii", "samples", "field"}, p);
    if (j.contains("center")) cfg.jint.center = get_point(j.at("center"), p + ".center");
    cfg.jint.radii = get_or<std::vector<double>>(j, "radii", cfg.jint.radii, p);
    cfg.jint.samples = get_or<int>(j, "samples", cfg.jint.samples, p);
    const auto field = get_or<std::string>(j, "field", "fem", p);
    if (field != "fem" && field != "analytic_mode3") {
      throw ConfigError(p + ".field: expected 'fem' or 'analytic_mode3'");
    }
    cfg.jint.analytic_mode3 = field == "analytic_mode3";
    if (cfg.jint.samples < 1) throw ConfigError(p + ".samples: must be >= 1");
    for (double r : cfg.jint.radii) {
      if (!(r > 0.0)) throw ConfigError(p + ".radii: must be positive");
    }
  }
  if (root.contains("grate")) {
    const auto& g = root.at("grate");
    const std::string p = "config.grate";
    check_known_keys(g, {"tip", "direction", "r_in", "r_out", "G_c"}, p);
    if (g.contains("tip")) cfg.grate.tip = get_point(g.at("tip"), p + ".tip");
    if (g.contains("direction")) {
      cfg.grate.direction = get_point(g.at("direction"), p + ".direction");
      if (!(cfg.grate.direction.norm() > 0.0)) throw ConfigError(p + ".direction: must be nonzero");
      cfg.grate.direction.normalize();
    }
    cfg.grate.r_in = get_or<double>(g, "r_in", cfg.grate.r_in, p);
    cfg.grate.r_out = get_or<double>(g, "r_out", cfg.grate.r_out, p);
    cfg.grate.G_c = get_or<double>(g, "G_c", cfg.grate.G_c, p);
    if (!(cfg.grate.r_in > 0.0 && cfg.grate.r_in < cfg.grate.r_out)) {
      throw ConfigError(p + ".r_in: need 0 < r_in < r_out");
    }
    if (!(cfg.grate.G_c > 0.0)) throw ConfigError(p + ".G_c: must be positive");
  }
  if (root.contains("verify")) {
    const auto& v = root.at("verify");
    const std::string p = "config.verify";
    check_known_keys(v, {"step", "tolerance"}, p);
    cfg.verify.step = get_or<double>(v, "step", cfg.verify.step, p);
    cfg.verify.tolerance = get_or<double>(v, "tolerance", cfg.verify.tolerance, p);
    if (!(cfg.verify.step > 0.0)) throw ConfigError(p + ".step: must be positive");
    if (!(cfg.verify.tolerance > 0.0)) throw ConfigError(p + ".tolerance: must be positive");
  }
  if (root.contains("abstract")) {
    const auto& a = root.at("abstract");
    const std::string p = "config.abstract";
    check_known_keys(a, {"families", "seed", "max_dim_u", "max_dim_mu"}, p);
    cfg.abstract.families = get_or<int>(a, "families", cfg.abstract.families, p);
    cfg.abstract.seed = get_or<std::uint64_t>(a, "seed", cfg.abstract.seed, p);
    cfg.abstract.max_dim_u = get_or<int>(a, "max_dim_u", cfg.abstract.max_dim_u, p);
    cfg.abstract.max_dim_mu = get_or<int>(a, "max_dim_mu", cfg.abstract.max_dim_mu, p);
    if (cfg.abstract.families < 1 || cfg.abstract.max_dim_u < 1 || cfg.abstract.max_dim_mu < 1) {
      throw ConfigError(p + ": families and dimensions must be >= 1");
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path().empty() ? "." : path.parent_path());
}

mesh::TriMesh build_mesh(const MeshSource& source, int refinement) {
  if (source.file) return mesh::read_mesh(*source.file);
  const int nx = refinement > 0 ? refinement : source.nx;
  const int ny = refinement > 0 ? refinement : source.ny;
  mesh::TriMesh m = mesh::gen_rect_mesh(source.x_range, source.y_range, nx, ny, source.dirichlet,
                                        source.allow_all_neumann);
  if (source.crack) m = mesh::insert_crack_slit(m, source.crack->first, source.crack->second);
  return m;
}

}  // namespace shaperate::cli
