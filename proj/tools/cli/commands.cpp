#include "commands.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "shaperate/error.hpp"
#include "shaperate/param_variation.hpp"

namespace shaperate::cli {
namespace {

namespace fs = std::filesystem;
namespace pv = param_variation;

// Runs job(i) for i in [0, n) on at most `threads` workers. Results are
// stored by index, so the order of completion does not affect output.
void parallel_for(int n, int threads, const std::function<void(int)>& job) {
  const int workers = std::clamp(threads, 1, std::max(1, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          job(i);
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<int> levels_of(const RunConfig& cfg) {
  return cfg.refinements.empty() ? std::vector<int>{0} : cfg.refinements;
}

void require_velocities(const RunConfig& cfg) {
  if (cfg.velocities.empty()) throw ConfigError("config.velocity: this command needs a velocity field");
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

struct ReportRow {
  std::string quantity;
  double value = 0.0;
  std::optional<std::array<double, 3>> terms;
  double mesh_h = 0.0;
  std::string field;
};

std::string report_csv(const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  out << "quantity,value,term1,term2,term3,mesh_h,field\n";
  for (const auto& r : rows) {
    out << r.quantity << ',' << format_double(r.value);
    for (int k = 0; k < 3; ++k) {
      out << ',';
      if (r.terms) out << format_double((*r.terms)[static_cast<std::size_t>(k)]);
    }
    out << ',' << format_double(r.mesh_h) << ',' << csv_field(r.field) << '\n';
  }
  return out.str();
}

void log_line(const CommandContext& ctx, const std::string& line) {
  if (ctx.log) *ctx.log << line << '\n';
}

fem::DiscreteField solve_on(const mesh::TriMesh& m, const RunConfig& cfg) {
  return fem::solve(fem::assemble(m, cfg.coefficients), cfg.solver_tol);
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kValidation:
    case ErrorKind::kConfiguration:
      return kExitConfig;
    case ErrorKind::kTopology:
    case ErrorKind::kParse:
    case ErrorKind::kGeometry:
    case ErrorKind::kMeshQuery:
      return kExitMesh;
    case ErrorKind::kDeformationTooLarge:
    case ErrorKind::kCoercivity:
    case ErrorKind::kSolver:
    case ErrorKind::kPrecondition:
    case ErrorKind::kInternal:
      return kExitSolver;
  }
  return kExitSolver;
}

void report_error(std::ostream& err, int code, const std::string& kind, const std::string& message) {
  nlohmann::json line{{"error", kind}, {"exit_code", code}, {"message", message}};
  err << line.dump() << '\n';
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_atomically(const fs::path& path, const std::string& contents) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::kConfiguration, "cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) fail(ErrorKind::kConfiguration, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

int threads_from_env() {
  const char* raw = std::getenv("SHAPERATE_THREADS");
  if (!raw) return 1;
  char* end = nullptr;
  const long n = std::strtol(raw, &end, 10);
  if (end == raw || *end != '\0' || n < 1) return 1;
  return static_cast<int>(std::min<long>(n, 256));
}

void cmd_meshgen(const CommandContext& ctx) {
  const auto m = build_mesh(ctx.config.mesh);
  const auto report = mesh::validate(m);
  if (!report.ok) {
    fail(ErrorKind::kTopology, "generated mesh failed validation: " + report.problems.front());
  }
  std::ostringstream out;
  mesh::write_mesh(m, out);
  write_atomically(ctx.out_dir / "mesh.txt", out.str());
  log_line(ctx, "meshgen: " + std::to_string(m.nodes().size()) + " nodes, " +
                    std::to_string(m.triangle_count()) + " triangles -> mesh.txt");
}

void cmd_solve(const CommandContext& ctx) {
  const auto m = build_mesh(ctx.config.mesh);
  fem::SolveStats stats;
  const auto u = fem::solve(fem::assemble(m, ctx.config.coefficients), ctx.config.solver_tol, &stats);
  std::ostringstream csv, vtk;
  fem::write_solution_csv(m, u, csv);
  fem::write_solution_vtk(m, u, vtk);
  write_atomically(ctx.out_dir / "solution.csv", csv.str());
  write_atomically(ctx.out_dir / "solution.vtk", vtk.str());
  log_line(ctx, "solve: " + std::to_string(m.nodes().size()) + " nodes, CG iterations " +
                    std::to_string(stats.iterations) + ", relative residual " +
                    format_double(stats.relative_residual));
}

void cmd_deriv(const CommandContext& ctx) {
  const auto& cfg = ctx.config;
  require_velocities(cfg);
  const auto levels = levels_of(cfg);
  const std::size_t nv = cfg.velocities.size();
  std::vector<std::vector<ReportRow>> per_level(levels.size());
  parallel_for(static_cast<int>(levels.size()), ctx.threads, [&](int i) {
    const auto m = build_mesh(cfg.mesh, levels[static_cast<std::size_t>(i)]);
    const auto u = solve_on(m, cfg);
    auto& rows = per_level[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < nv; ++k) {
      const auto& mu = cfg.velocities[k];
      const auto r = shape::shape_derivative_domain(m, cfg.coefficients, u, mu, cfg.sampling);
      rows.push_back({"shape_derivative", r.value, std::array{r.term_xi, r.term_grad, r.term_div},
                      r.mesh_h, r.field});
      if (cfg.boundary_formula) {
        rows.push_back({"boundary_formula",
                        shape::dirichlet_boundary_formula(m, cfg.coefficients, u, mu), std::nullopt,
                        r.mesh_h, r.field});
      }
    }
  });
  std::vector<ReportRow> rows;
  for (auto& level : per_level) rows.insert(rows.end(), level.begin(), level.end());
  write_atomically(ctx.out_dir / "deriv.csv", report_csv(rows));
  for (const auto& r : rows) {
    log_line(ctx, "deriv: " + r.quantity + " " + r.field + " h=" + format_double(r.mesh_h) + " " +
                      format_double(r.value));
  }
}

void cmd_jint(const CommandContext& ctx) {
  const auto& cfg = ctx.config;
  const auto& opt = cfg.jint;
  const auto mu = deformation::translate(1.0, 0.0);
  std::ostringstream out;
  out << "radius,value,samples,mesh_h,field\n";
  if (opt.analytic_mode3) {
    const auto field = shape::mode3_field(opt.center, Vec2(1.0, 0.0));
    for (double r : opt.radii) {
      const double j = shape::j_integral({opt.center, r, opt.samples}, field, cfg.coefficients, mu);
      out << format_double(r) << ',' << format_double(j) << ',' << opt.samples << ",0,analytic_mode3\n";
      log_line(ctx, "jint: r=" + format_double(r) + " J=" + format_double(j));
    }
  } else {
    const auto m = build_mesh(cfg.mesh);
    const auto u = solve_on(m, cfg);
    const double h = m.max_edge_length();
    for (double r : opt.radii) {
      const double j = shape::j_integral({opt.center, r, opt.samples}, m, u, cfg.coefficients, mu);
      out << format_double(r) << ',' << format_double(j) << ',' << opt.samples << ','
          << format_double(h) << ",fem\n";
      log_line(ctx, "jint: r=" + format_double(r) + " J=" + format_double(j));
    }
  }
  write_atomically(ctx.out_dir / "jint.csv", out.str());
}

void cmd_grate(const CommandContext& ctx) {
  const auto& cfg = ctx.config;
  const auto& g = cfg.grate;
  const auto levels = levels_of(cfg);
  const auto mu = deformation::crack_extension_field(g.tip, g.direction, g.r_in, g.r_out);
  std::vector<ReportRow> rows(levels.size());
  parallel_for(static_cast<int>(levels.size()), ctx.threads, [&](int i) {
    const auto m = build_mesh(cfg.mesh, levels[static_cast<std::size_t>(i)]);
    const auto u = solve_on(m, cfg);
    const double G =
        shape::energy_release_rate(m, cfg.coefficients, u, g.tip, g.direction, g.r_in, g.r_out,
                                   cfg.sampling);
    const auto r = shape::shape_derivative_domain(m, cfg.coefficients, u, mu, cfg.sampling);
    rows[static_cast<std::size_t>(i)] = {"energy_release_rate", G,
                                         std::array{0.0 - r.term_xi, 0.0 - r.term_grad, 0.0 - r.term_div},
                                         r.mesh_h, r.field};
  });
  const double G = rows.back().value;
  const auto verdict = shape::griffith_check(G, g.G_c);
  write_atomically(ctx.out_dir / "grate.csv", report_csv(rows));
  std::ostringstream griffith;
  griffith << "G,G_c,margin,verdict\n"
           << format_double(G) << ',' << format_double(g.G_c) << ','
           << format_double(verdict.margin) << ','
           << (verdict.propagates ? "propagates" : "arrested") << '\n';
  write_atomically(ctx.out_dir / "griffith.csv", griffith.str());
  for (const auto& r : rows) {
    log_line(ctx, "grate: h=" + format_double(r.mesh_h) + " G=" + format_double(r.value));
  }
  log_line(ctx, std::string("grate: ") + (verdict.propagates ? "propagates" : "arrested") +
                    " (G - G_c = " + format_double(verdict.margin) + ")");
}

void cmd_verify(const CommandContext& ctx) {
  const auto& cfg = ctx.config;
  require_velocities(cfg);
  const auto m = build_mesh(cfg.mesh);
  const auto u = solve_on(m, cfg);
  const std::size_t nv = cfg.velocities.size();
  std::vector<std::array<double, 2>> values(nv);
  parallel_for(static_cast<int>(nv), ctx.threads, [&](int k) {
    const auto& mu = cfg.velocities[static_cast<std::size_t>(k)];
    values[static_cast<std::size_t>(k)] = {
        shape::shape_derivative_domain(m, cfg.coefficients, u, mu, cfg.sampling).value,
        shape::fd_oracle(m, cfg.coefficients, mu, cfg.verify.step)};
  });
  std::ostringstream out;
  out << "field,domain,fd,discrepancy,tolerance,pass\n";
  int failures = 0;
  for (std::size_t k = 0; k < nv; ++k) {
    const auto [domain, fd] = values[k];
    const double discrepancy = std::abs(domain - fd);
    const double tol = cfg.verify.tolerance * (1.0 + std::abs(domain));
    const bool pass = discrepancy <= tol;
    failures += pass ? 0 : 1;
    out << csv_field(cfg.velocities[k].descriptor()) << ',' << format_double(domain) << ','
        << format_double(fd) << ',' << format_double(discrepancy) << ',' << format_double(tol) << ','
        << (pass ? "true" : "false") << '\n';
    log_line(ctx, "verify: " + cfg.velocities[k].descriptor() + " discrepancy " +
                      format_double(discrepancy) + (pass ? " ok" : " FAILED"));
  }
  write_atomically(ctx.out_dir / "verify.csv", out.str());
  if (failures > 0) {
    throw CheckFailed(std::to_string(failures) + " envelope identity check(s) exceeded tolerance");
  }
}

namespace {

struct AbstractRow {
  int dim_u = 0, dim_mu = 0;
  double envelope_err = 0, sensitivity_err = 0, second_err = 0, chain_rule = 0, asymmetry = 0;
  double holder_slope = 0;
};

double rel_err(const pv::Matrix& a, const pv::Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

AbstractRow abstract_family(int dim_u, int dim_mu, std::uint64_t seed) {
  const auto family = pv::make_quadratic_family(pv::random_quadratic_data(dim_u, dim_mu, seed));
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  pv::Vector mu(dim_mu);
  for (int j = 0; j < dim_mu; ++j) mu[j] = unif(rng);
  const pv::Vector u0 = pv::Vector::Zero(dim_u);
  const double tol = 1e-12;
  const auto rec = pv::find_minimizer(family, mu, u0, tol);

  const pv::Vector env = pv::envelope_derivative(family, mu, rec);
  const pv::Matrix sens = pv::minimizer_sensitivity(family, mu, rec);
  const auto second = pv::envelope_second_derivative(family, mu, rec);

  const double h = 1e-5;
  pv::Vector env_fd(dim_mu);
  pv::Matrix sens_fd(dim_u, dim_mu), second_fd(dim_mu, dim_mu);
  for (int j = 0; j < dim_mu; ++j) {
    pv::Vector mp = mu, mm = mu;
    mp[j] += h;
    mm[j] -= h;
    const auto rp = pv::find_minimizer(family, mp, rec.u_star, tol);
    const auto rm = pv::find_minimizer(family, mm, rec.u_star, tol);
    env_fd[j] = (family.value(rp.u_star, mp) - family.value(rm.u_star, mm)) / (2 * h);
    sens_fd.col(j) = (rp.u_star - rm.u_star) / (2 * h);
    second_fd.col(j) =
        (pv::envelope_derivative(family, mp, rp) - pv::envelope_derivative(family, mm, rm)) / (2 * h);
  }

  AbstractRow row;
  row.dim_u = dim_u;
  row.dim_mu = dim_mu;
  row.envelope_err = rel_err(env, env_fd);
  row.sensitivity_err = rel_err(sens, sens_fd);
  row.second_err = rel_err(second.value, second_fd);
  row.asymmetry = second.asymmetry;
  const pv::Vector g = family.grad_u(rec.u_star, mu);
  for (int j = 0; j < dim_mu; ++j) row.chain_rule = std::max(row.chain_rule, std::abs(g.dot(sens.col(j))));

  pv::Vector dir(dim_mu);
  for (int j = 0; j < dim_mu; ++j) dir[j] = unif(rng);
  const auto table = pv::holder_probe(family, mu, dir, {1e-1, 3e-2, 1e-2, 3e-3, 1e-3}, tol);
  row.holder_slope = table.loglog_slope.value_or(std::numeric_limits<double>::quiet_NaN());
  return row;
}

}  // namespace

void cmd_abstract(const CommandContext& ctx) {
  const auto& opt = ctx.config.abstract;
  std::vector<AbstractRow> rows(static_cast<std::size_t>(opt.families));
  parallel_for(opt.families, ctx.threads, [&](int k) {
    const int dim_u = 1 + (k * 7) % opt.max_dim_u;
    const int dim_mu = 1 + k % opt.max_dim_mu;
    rows[static_cast<std::size_t>(k)] =
        abstract_family(dim_u, dim_mu, opt.seed + static_cast<std::uint64_t>(k));
  });

  std::ostringstream out;
  out << "family,dim_u,dim_mu,envelope_err,sensitivity_err,second_err,chain_rule,asymmetry,"
         "holder_slope,pass\n";
  int failures = 0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    const bool pass = r.envelope_err <= 1e-7 && r.sensitivity_err <= 1e-6 && r.second_err <= 1e-5 &&
                      r.chain_rule <= 1e-10 && r.holder_slope >= 0.95;
    failures += pass ? 0 : 1;
    out << k << ',' << r.dim_u << ',' << r.dim_mu << ',' << format_double(r.envelope_err) << ','
        << format_double(r.sensitivity_err) << ',' << format_double(r.second_err) << ','
        << format_double(r.chain_rule) << ',' << format_double(r.asymmetry) << ','
        << format_double(r.holder_slope) << ',' << (pass ? "true" : "false") << '\n';
  }
  write_atomically(ctx.out_dir / "abstract.csv", out.str());
  log_line(ctx, "abstract: " + std::to_string(rows.size() - static_cast<std::size_t>(failures)) +
                    "/" + std::to_string(rows.size()) + " families passed");
  if (failures > 0) throw CheckFailed(std::to_string(failures) + " family check(s) failed");
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"solve",  "deriv",    "jint",   "grate",
                                              "verify", "abstract", "meshgen"};
  return names;
}

int run_command(const std::string& command, const fs::path& config_path, const fs::path& out_dir,
                std::ostream& log, std::ostream& err) {
  static const std::map<std::string, void (*)(const CommandContext&)> kCommands{
      {"solve", cmd_solve},   {"deriv", cmd_deriv},       {"jint", cmd_jint},
      {"grate", cmd_grate},   {"verify", cmd_verify},     {"abstract", cmd_abstract},
      {"abstract-check", cmd_abstract}, {"meshgen", cmd_meshgen}};
  try {
    const auto it = kCommands.find(command);
    if (it == kCommands.end()) throw ConfigError("unknown command '" + command + "'");
    CommandContext ctx;
    ctx.config = load_config(config_path);
    ctx.out_dir = out_dir;
    ctx.threads = threads_from_env();
    ctx.log = &log;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + out_dir.string());
    it->second(ctx);
    return kExitOk;
  } catch (const ConfigError& e) {
    report_error(err, kExitConfig, "config", e.what());
    return kExitConfig;
  } catch (const CheckFailed& e) {
    report_error(err, kExitCheckFailed, "check_failed", e.what());
    return kExitCheckFailed;
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    report_error(err, code, std::string(to_string(e.kind())), e.what());
    return code;
  } catch (const std::exception& e) {
    report_error(err, kExitSolver, "internal", e.what());
    return kExitSolver;
  }
}

}  // namespace shaperate::cli
