#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "shaperate/deformation.hpp"
#include "shaperate/fem.hpp"
#include "shaperate/mesh.hpp"
#include "shaperate/shape.hpp"

namespace shaperate::cli {

/// Config problems, reported with the JSON path of the offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MeshSource {
  std::optional<std::filesystem::path> file;
  std::pair<double, double> x_range{0.0, 1.0};
  std::pair<double, double> y_range{0.0, 1.0};
  int nx = 16;
  int ny = 16;
  mesh::SideSet dirichlet = mesh::kAllSides;
  bool allow_all_neumann = false;
  std::optional<std::pair<Point, Point>> crack;  // (mouth, tip)
};

struct JintOptions {
  Point center = Point::Zero();
  std::vector<double> radii{0.1, 0.2};
  int samples = 4096;
  bool analytic_mode3 = false;  // evaluate the closed-form field instead of the FE solution
};

struct GrateOptions {
  Point tip = Point::Zero();
  Vec2 direction{1.0, 0.0};
  double r_in = 0.2;
  double r_out = 0.8;
  double G_c = 1.0;
};

struct VerifyOptions {
  double step = 1e-4;
  double tolerance = 1e-6;
};

struct AbstractOptions {
  int families = 20;
  std::uint64_t seed = 1;
  int max_dim_u = 16;
  int max_dim_mu = 4;
};

struct RunConfig {
  MeshSource mesh;
  fem::CoefficientSet coefficients;
  std::vector<deformation::VelocityField> velocities;
  std::vector<int> refinements;  // empty: use the mesh as configured
  double solver_tol = 1e-10;
  shape::VelocitySampling sampling = shape::VelocitySampling::kInterpolated;
  bool boundary_formula = false;
  JintOptions jint;
  GrateOptions grate;
  VerifyOptions verify;
  AbstractOptions abstract;
};

/// Parses a JSON run configuration. Relative mesh paths resolve against the
/// config file's directory.
RunConfig parse_config(const std::string& json_text,
                       const std::filesystem::path& base_dir = std::filesystem::path("."));
RunConfig load_config(const std::filesystem::path& path);

/// Builds a velocity field from its config spelling, e.g. `translate(1,0)`.
deformation::VelocityField parse_velocity(const std::string& spec);
fem::CoefficientSet parse_coefficients(const std::string& spec);

/// Builds the mesh for a refinement level (n <= 0 keeps the configured size).
mesh::TriMesh build_mesh(const MeshSource& source, int refinement = 0);

}  // namespace shaperate::cli
