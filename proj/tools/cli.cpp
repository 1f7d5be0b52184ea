#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tkrr/alignment.hpp"
#include "tkrr/csv.hpp"
#include "tkrr/errors.hpp"
#include "tkrr/estimator.hpp"
#include "tkrr/experiments.hpp"
#include "tkrr/kernel.hpp"
#include "tkrr/random.hpp"
#include "tkrr/risk.hpp"
#include "tkrr/spectral.hpp"
#include "tkrr/version.hpp"

namespace tkrr::cli {
namespace {

namespace fs = std::filesystem;

/// Raised for flag combinations CLI11 cannot validate on its own.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Manifest

/// Command name, resolved parameters (in insertion order), seed and outputs.
class Manifest {
 public:
  explicit Manifest(std::string command, std::uint64_t seed)
      : command_(std::move(command)), seed_(seed) {}

  void set(const std::string& key, std::string value) { params_.emplace_back(key, std::move(value)); }
  void set(const std::string& key, double value) { set(key, csv::format_double(value)); }
  void set(const std::string& key, std::size_t value) { set(key, std::to_string(value)); }
  void add_output(const fs::path& path) { outputs_.push_back(path.string()); }

  [[nodiscard]] csv::Metadata metadata() const {
    csv::Metadata md;
    md.emplace_back("manifest.command", command_);
    md.emplace_back("manifest.version", kVersion);
    md.emplace_back("manifest.seed", std::to_string(seed_));
    for (const auto& [key, value] : params_) md.emplace_back("manifest." + key, value);
    return md;
  }

  [[nodiscard]] nlohmann::ordered_json json() const {
    nlohmann::ordered_json j;
    j["command"] = command_;
    j["version"] = kVersion;
    j["seed"] = seed_;
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto& [key, value] : params_) params[key] = value;
    j["parameters"] = params;
    j["outputs"] = outputs_;
    return j;
  }

  void write(const fs::path& dir) {
    const fs::path path = dir / "manifest.json";
    add_output(path);
    csv::write_atomic(path, json().dump(2) + "\n");
  }

 private:
  std::string command_;
  std::uint64_t seed_;
  csv::Metadata params_;
  std::vector<std::string> outputs_;
};

// ---------------------------------------------------------------------------
// Flag parsing helpers

double parse_real(const std::string& text, const std::string& flag) {
  double value = 0.0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw UsageError(flag + ": '" + text + "' is not a finite number");
  }
  return value;
}

std::size_t parse_count(const std::string& text, const std::string& flag) {
  std::size_t value = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw UsageError(flag + ": '" + text + "' is not a nonnegative integer");
  return value;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cell;
  std::istringstream in(text);
  while (std::getline(in, cell, sep)) parts.push_back(cell);
  if (!text.empty() && text.back() == sep) parts.emplace_back();
  return parts;
}

std::vector<double> parse_real_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  for (const std::string& cell : split(text, ',')) out.push_back(parse_real(cell, flag));
  if (out.empty()) throw UsageError(flag + ": empty list");
  return out;
}

std::vector<std::size_t> parse_count_list(const std::string& text, const std::string& flag) {
  std::vector<std::size_t> out;
  for (const std::string& cell : split(text, ',')) out.push_back(parse_count(cell, flag));
  if (out.empty()) throw UsageError(flag + ": empty list");
  return out;
}

std::string join_reals(const std::vector<double>& values) {
  std::vector<std::string> cells;
  for (const double v : values) cells.push_back(csv::format_double(v));
  return csv::join(cells);
}

std::string join_counts(const std::vector<std::size_t>& values) {
  std::vector<std::string> cells;
  for (const std::size_t v : values) cells.push_back(std::to_string(v));
  return csv::join(cells);
}

/// "n" selects full KRR; otherwise an integer in [1, n].
std::size_t parse_truncation(const std::string& text, std::size_t n) {
  if (text == "n") return n;
  const std::size_t r = parse_count(text, "--r");
  if (r < 1 || r > n) throw UsageError("--r must lie in [1, " + std::to_string(n) + "] or be 'n'");
  return r;
}

/// "b:ell,b:ell,..." into bands.
std::vector<Band> parse_bands(const std::string& text) {
  std::vector<Band> bands;
  for (const std::string& item : split(text, ',')) {
    const std::vector<std::string> parts = split(item, ':');
    if (parts.size() != 2) throw UsageError("--bands: expected b:ell, got '" + item + "'");
    bands.push_back(Band{parse_count(parts[0], "--bands"), parse_count(parts[1], "--bands")});
  }
  if (bands.empty()) throw UsageError("--bands: empty list");
  return bands;
}

/// Grid text: "log:min:max:count", "lin:min:max:count" or a comma list.
std::vector<double> parse_grid(const std::string& text, const std::string& flag) {
  const std::vector<std::string> parts = split(text, ':');
  if (parts.size() == 4 && (parts[0] == "log" || parts[0] == "lin")) {
    const double lo = parse_real(parts[1], flag);
    const double hi = parse_real(parts[2], flag);
    const std::size_t count = parse_count(parts[3], flag);
    if (count == 0 || hi < lo) throw UsageError(flag + ": grid needs count >= 1 and min <= max");
    if (parts[0] == "log") return log_grid(lo, hi, count);
    std::vector<double> out(count, lo);
    for (std::size_t i = 1; i < count; ++i) {
      out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    return out;
  }
  return parse_real_list(text, flag);
}

unsigned parse_threads(const std::string& text) {
  if (text == "auto") return 0;
  const std::size_t k = parse_count(text, "--threads");
  if (k == 0) throw UsageError("--threads must be positive or 'auto'");
  return static_cast<unsigned>(k);
}

// ---------------------------------------------------------------------------
// Shared option groups

struct CommonOptions {
  std::uint64_t seed = 0;
  std::string out = ".";
  std::string threads = "1";
  std::ostream* diagnostics = nullptr;  // set by run(), receives warnings
};

void add_common(CLI::App& cmd, CommonOptions& o) {
  cmd.add_option("--seed", o.seed, "Run seed; component seeds are derived from it")->capture_default_str();
  cmd.add_option("--out", o.out, "Output directory")->capture_default_str();
  cmd.add_option("--threads", o.threads, "Worker threads, a positive count or 'auto'")->capture_default_str();
}

/// Where the eigenvalues (and possibly eigenvectors) come from.
struct SourceOptions {
  std::string eigen_path;
  std::string input_path;
  std::size_t n = 0;
  std::size_t d = 0;
  std::string kernel = "gaussian";
  std::string bandwidth = "auto";
  std::string solver = "selfadjoint";
  double alpha = 1.0;
  CLI::Option* alpha_opt = nullptr;
  CLI::Option* d_opt = nullptr;
};

void add_kernel_flags(CLI::App& cmd, SourceOptions& o) {
  cmd.add_option("--input", o.input_path, "Covariates CSV (headerless, one point per row)");
  cmd.add_option("--n", o.n, "Sample size for synthesized covariates or spectra");
  o.d_opt = cmd.add_option("--d", o.d, "Dimension of synthesized covariates");
  cmd.add_option("--kernel", o.kernel, "Kernel family")
      ->check(CLI::IsMember({"gaussian"}))
      ->capture_default_str();
  cmd.add_option("--bandwidth", o.bandwidth, "Gaussian bandwidth h, or 'auto' for sqrt(d/2)")
      ->capture_default_str();
  cmd.add_option("--solver", o.solver, "Eigensolver")
      ->check(CLI::IsMember({"selfadjoint", "jacobi"}))
      ->capture_default_str();
}

void add_source(CLI::App& cmd, SourceOptions& o) {
  add_kernel_flags(cmd, o);
  cmd.add_option("--eigen", o.eigen_path, "Eigen CSV written by the spectrum command");
  o.alpha_opt = cmd.add_option("--alpha", o.alpha,
                               "Polynomial eigenvalues mu_i = i^-alpha (used when no kernel source is given)");
}

struct AlignmentOptions {
  std::string bands;
  std::string xi_path;
  double gamma = 1.0;
  CLI::Option* gamma_opt = nullptr;
};

void add_alignment(CLI::App& cmd, AlignmentOptions& o) {
  cmd.add_option("--bands", o.bands, "Random band-limited scores, b:ell[,b:ell...] (default 10:20)");
  o.gamma_opt = cmd.add_option("--gamma", o.gamma, "Polynomial scores xi_i = i^-(gamma alpha + 1/2)");
  cmd.add_option("--xi", o.xi_path, "Alignment CSV with precomputed scores");
}

/// Resolved problem: eigenvalues, optional eigenvectors, and scores.
struct Problem {
  std::optional<EigenSystem> eigen;
  Eigen::VectorXd mu;
  Eigen::VectorXd xi;
  std::size_t n = 0;
  std::optional<double> alpha;
};

KernelSpec resolve_kernel(const SourceOptions& o, std::size_t d, Manifest& m) {
  const double h = o.bandwidth == "auto" ? auto_bandwidth(d) : parse_real(o.bandwidth, "--bandwidth");
  const KernelSpec spec = KernelSpec::gaussian(h);
  m.set("kernel", describe(spec));
  m.set("bandwidth", o.bandwidth);
  return spec;
}

/// Covariates from --input or sampled with the "covariates" subseed.
Covariates resolve_covariates(const SourceOptions& o, const CommonOptions& c, Manifest& m) {
  if (!o.input_path.empty()) {
    m.set("input", o.input_path);
    return read_covariates_csv(o.input_path);
  }
  if (o.n == 0 || o.d == 0) throw UsageError("give --input, or both --n and --d to sample covariates");
  const std::uint64_t sub = derive_seed(c.seed, "covariates");
  m.set("n", o.n);
  m.set("d", o.d);
  m.set("covariates", "uniform[0,1)^d");
  m.set("covariates_seed", std::to_string(sub));
  return sample_uniform_cube(o.n, o.d, sub);
}

EigenSystem decompose(const Covariates& x, const KernelSpec& spec, const SourceOptions& o,
                      const CommonOptions& c, unsigned threads, Manifest& m) {
  m.set("solver", o.solver);
  const EigenSolverKind kind = o.solver == "jacobi" ? EigenSolverKind::Jacobi : EigenSolverKind::SelfAdjoint;
  EigenSystem eigen = eigendecompose(kernel_matrix(x, spec, threads), kind);
  m.set("floored_eigenvalues", eigen.floored_count());
  if (eigen.floored_count() > 0 && c.diagnostics != nullptr) {
    *c.diagnostics << "warning: " << eigen.floored_count() << " eigenvalue(s) below "
                   << kEigenFloorRelative << " * mu_1 were set to 0\n";
  }
  return eigen;
}

Problem resolve_problem(const SourceOptions& s, const AlignmentOptions& a, const CommonOptions& c,
                        unsigned threads, Manifest& m) {
  Problem p;
  const bool kernel_source = !s.input_path.empty() || s.d_opt->count() > 0;
  if (!s.eigen_path.empty()) {
    m.set("source", "eigen-file");
    m.set("eigen", s.eigen_path);
    p.eigen = read_eigen_csv(s.eigen_path);
  } else if (kernel_source) {
    m.set("source", "kernel");
    const Covariates x = resolve_covariates(s, c, m);
    p.eigen = decompose(x, resolve_kernel(s, x.d(), m), s, c, threads, m);
  } else if (s.alpha_opt->count() > 0) {
    if (s.n == 0) throw UsageError("--alpha spectra need --n");
    m.set("source", "polynomial");
    m.set("n", s.n);
    m.set("alpha", s.alpha);
    p.mu = polynomial_spectra(s.n, s.alpha, 1.0).mu;
    p.n = s.n;
  } else {
    throw UsageError("no spectrum source: give --eigen, --input, --n with --d, or --n with --alpha");
  }
  if (p.eigen) {
    p.mu = p.eigen->mu();
    p.n = p.eigen->n();
  }
  if (s.alpha_opt->count() > 0) p.alpha = s.alpha;

  const int chosen = static_cast<int>(!a.bands.empty()) + static_cast<int>(a.gamma_opt->count() > 0) +
                     static_cast<int>(!a.xi_path.empty());
  if (chosen > 1) throw UsageError("--bands, --gamma and --xi are mutually exclusive");
  if (!a.xi_path.empty()) {
    m.set("xi", a.xi_path);
    const AlignmentSpectrum spectrum = read_alignment_csv(a.xi_path);
    if (spectrum.n() != p.n) throw UsageError("--xi has " + std::to_string(spectrum.n()) + " scores, expected " + std::to_string(p.n));
    m.set("alignment", spectrum.provenance());
    p.xi = spectrum.xi;
  } else if (a.gamma_opt->count() > 0) {
    if (!p.alpha) throw UsageError("--gamma needs --alpha");
    const AlignmentSpectrum spectrum = polynomial_alignment(p.n, *p.alpha, a.gamma);
    m.set("alignment", spectrum.provenance());
    p.xi = spectrum.xi;
  } else {
    const std::vector<Band> bands = parse_bands(a.bands.empty() ? "10:20" : a.bands);
    const std::uint64_t sub = derive_seed(c.seed, "alignment");
    const AlignmentSpectrum spectrum = multiband_spectrum(p.n, bands, sub);
    m.set("alignment", spectrum.provenance());
    m.set("alignment_seed", std::to_string(sub));
    p.xi = spectrum.xi;
  }
  return p;
}

fs::path prepare_out(const CommonOptions& c) {
  const fs::path dir(c.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_spectrum(const CommonOptions& c, const SourceOptions& s, std::ostream& out) {
  const unsigned threads = parse_threads(c.threads);
  Manifest m("spectrum", c.seed);
  const fs::path dir = prepare_out(c);
  const Covariates x = resolve_covariates(s, c, m);
  const KernelSpec spec = resolve_kernel(s, x.d(), m);
  const EigenSystem eigen = decompose(x, spec, s, c, threads, m);

  const fs::path eigen_path = dir / "eigen.csv";
  m.add_output(eigen_path);
  if (s.input_path.empty()) {
    const fs::path cov_path = dir / "covariates.csv";
    m.add_output(cov_path);
    write_covariates_csv(cov_path, x);
  }
  write_eigen_csv(eigen_path, eigen, m.metadata());
  m.write(dir);
  out << "spectrum: n=" << eigen.n() << " mu_1=" << csv::format_double(eigen.mu(0))
      << " floored=" << eigen.floored_count() << " -> " << eigen_path.string() << "\n";
  return kOk;
}

struct MseOptions {
  double lambda = 0.0;
  std::string r;
  double sigma = 0.0;
  bool check_mc = false;
  std::size_t trials = 100000;
};

int cmd_mse(const CommonOptions& c, const SourceOptions& s, const AlignmentOptions& a,
            const MseOptions& o, std::ostream& out) {
  const unsigned threads = parse_threads(c.threads);
  Manifest m("mse", c.seed);
  const fs::path dir = prepare_out(c);
  const Problem p = resolve_problem(s, a, c, threads, m);
  const std::size_t r = parse_truncation(o.r, p.n);
  m.set("lambda", o.lambda);
  m.set("r", r);
  m.set("sigma", o.sigma);

  const MseReport report = exact_mse(p.mu, p.xi, r, o.lambda, o.sigma, p.n);
  std::vector<std::string> header = mse_report_header();
  std::vector<std::string> row = mse_report_row(report);
  bool passed = true;
  if (o.check_mc) {
    if (o.trials < 2) throw UsageError("--trials must be at least 2");
    const std::uint64_t sub = derive_seed(c.seed, "monte_carlo");
    m.set("mc_trials", o.trials);
    m.set("mc_seed", std::to_string(sub));
    const MonteCarloEstimate mc = p.eigen ? monte_carlo_mse(*p.eigen, p.xi, r, o.lambda, o.sigma, o.trials, sub)
                                          : monte_carlo_mse(p.mu, p.xi, r, o.lambda, o.sigma, p.n, o.trials, sub);
    const double deviation = std::abs(mc.estimate - report.total);
    passed = deviation <= 3.0 * mc.std_error;
    header.insert(header.end(), {"mc_estimate", "mc_std_error", "mc_trials", "mc_check"});
    row.insert(row.end(), {csv::format_double(mc.estimate), csv::format_double(mc.std_error),
                           std::to_string(mc.trials), passed ? "PASS" : "FAIL"});
    out << "monte carlo: " << csv::format_double(mc.estimate) << " +- " << csv::format_double(mc.std_error)
        << " (" << (passed ? "PASS" : "FAIL") << ", 3 standard errors)\n";
  }
  const fs::path path = dir / "mse.csv";
  m.add_output(path);
  csv::Document doc;
  doc.add_metadata(m.metadata());
  doc.set_header(std::move(header));
  doc.add_row(std::move(row));
  doc.write(path);
  m.write(dir);
  out << "exact mse: bias_reg=" << csv::format_double(report.bias_reg)
      << " bias_tail=" << csv::format_double(report.bias_tail)
      << " variance=" << csv::format_double(report.variance)
      << " total=" << csv::format_double(report.total) << "\n";
  return passed ? kOk : kCheckFailed;
}

struct CurveOptions {
  std::string axis = "lambda";
  std::string r = "n";
  std::string lambda_grid = "log:1e-6:1e2:200";
  std::string sigmas = "0,0.05,0.1,0.2,0.5,1";
  double lambda = 1e-10;
  std::string r_range;
  std::string sigma_over_sqrtn = "0,0.01,0.02,0.05,0.1";
};

int cmd_curve(const CommonOptions& c, const SourceOptions& s, const AlignmentOptions& a,
              const CurveOptions& o, std::ostream& out) {
  const unsigned threads = parse_threads(c.threads);
  Manifest m("curve", c.seed);
  const fs::path dir = prepare_out(c);
  const Problem p = resolve_problem(s, a, c, threads, m);
  m.set("axis", o.axis);
  CurveTable table;
  if (o.axis == "lambda") {
    const std::size_t r = parse_truncation(o.r, p.n);
    const std::vector<double> grid = parse_grid(o.lambda_grid, "--lambda-grid");
    const std::vector<double> sigmas = parse_real_list(o.sigmas, "--sigmas");
    m.set("r", r);
    m.set("lambda_grid", o.lambda_grid);
    m.set("sigmas", join_reals(sigmas));
    table = lambda_curve(p.mu, p.xi, r, grid, sigmas, p.n, threads);
  } else {
    std::vector<std::size_t> rs;
    if (o.r_range.empty()) {
      for (std::size_t r = 1; r <= p.n; ++r) rs.push_back(r);
    } else {
      const std::vector<std::string> parts = split(o.r_range, ':');
      if (parts.size() != 2) throw UsageError("--r-range: expected lo:hi");
      const std::size_t lo = parse_count(parts[0], "--r-range");
      const std::size_t hi = parse_count(parts[1], "--r-range");
      if (lo < 1 || hi > p.n || lo > hi) throw UsageError("--r-range must lie inside [1, n]");
      for (std::size_t r = lo; r <= hi; ++r) rs.push_back(r);
    }
    const std::vector<double> keys = parse_real_list(o.sigma_over_sqrtn, "--sigma-over-sqrtn");
    m.set("lambda", o.lambda);
    m.set("r_range", std::to_string(rs.front()) + ":" + std::to_string(rs.back()));
    m.set("sigma_over_sqrtn", join_reals(keys));
    table = r_curve(p.mu, p.xi, o.lambda, rs, keys, p.n, threads);
  }
  const fs::path path = dir / "curve.csv";
  m.add_output(path);
  write_curve_csv(path, table, m.metadata());
  m.write(dir);
  out << "curve: " << table.rows.size() << " rows -> " << path.string() << "\n";
  return kOk;
}

SurfaceAxisKind parse_axis_kind(const std::string& name) {
  if (name == "lambda") return SurfaceAxisKind::Lambda;
  if (name == "r") return SurfaceAxisKind::Truncation;
  if (name == "sigma") return SurfaceAxisKind::Sigma;
  if (name == "sigma_over_sqrtn") return SurfaceAxisKind::SigmaOverSqrtN;
  throw UsageError("unknown surface axis '" + name + "' (lambda, r, sigma, sigma_over_sqrtn)");
}

/// "name=grid", e.g. "lambda=log:1e-6:1e2:50" or "r=1,2,3".
SurfaceAxis parse_axis(const std::string& text, const std::string& flag) {
  const std::size_t eq = text.find('=');
  if (eq == std::string::npos) throw UsageError(flag + ": expected name=grid");
  return SurfaceAxis{parse_axis_kind(text.substr(0, eq)), parse_grid(text.substr(eq + 1), flag)};
}

struct SurfaceOptions {
  std::string axis1;
  std::string axis2;
  std::string lambda;
  std::string r;
  std::string sigma;
};

int cmd_surface(const CommonOptions& c, const SourceOptions& s, const AlignmentOptions& a,
                const SurfaceOptions& o, std::ostream& out) {
  const unsigned threads = parse_threads(c.threads);
  Manifest m("surface", c.seed);
  const fs::path dir = prepare_out(c);
  const Problem p = resolve_problem(s, a, c, threads, m);
  const SurfaceAxis axis1 = parse_axis(o.axis1, "--axis1");
  const SurfaceAxis axis2 = parse_axis(o.axis2, "--axis2");
  const auto swept = [&](SurfaceAxisKind kind) { return axis1.kind == kind || axis2.kind == kind; };
  const bool noise_swept = swept(SurfaceAxisKind::Sigma) || swept(SurfaceAxisKind::SigmaOverSqrtN);

  SurfaceParams fixed;
  fixed.n = p.n;
  const auto require = [](const std::string& value, const char* flag) {
    if (value.empty()) throw UsageError(std::string(flag) + " is required when it is not a surface axis");
    return value;
  };
  if (!swept(SurfaceAxisKind::Lambda)) {
    fixed.lambda = parse_real(require(o.lambda, "--lambda"), "--lambda");
    m.set("lambda", fixed.lambda);
  }
  if (!swept(SurfaceAxisKind::Truncation)) {
    fixed.r = parse_truncation(require(o.r, "--r"), p.n);
    m.set("r", fixed.r);
  }
  if (!noise_swept) {
    fixed.sigma = parse_real(require(o.sigma, "--sigma"), "--sigma");
    m.set("sigma", fixed.sigma);
  }
  m.set("axis1", o.axis1);
  m.set("axis2", o.axis2);
  const SurfaceGrid grid = surface(p.mu, p.xi, axis1, axis2, fixed, threads);
  const fs::path path = dir / "surface.csv";
  m.add_output(path);
  write_surface_csv(path, grid, m.metadata());
  m.write(dir);
  out << "surface: " << grid.totals.rows() << "x" << grid.totals.cols() << " -> " << path.string() << "\n";
  return kOk;
}

struct RatesOptions {
  double alpha = 1.0;
  double gamma = 10.0;
  double sigma = 1.0;
  std::string n_grid = "256,512,1024,2048,4096,8192,16384";
  double lambda_min = 1e-10;
  double lambda_max = 1e2;
  std::size_t lambda_points = 1000;
  std::string preset;
  std::size_t drop_smallest = 0;
  std::string rounding = "floor";
  bool gap = false;
  std::string alphas = "1,2";
  std::string sigmas = "0.5,1";
};

int cmd_rates(const CommonOptions& c, RatesOptions o, std::ostream& out) {
  const unsigned threads = parse_threads(c.threads);
  if (o.preset == "paper") {
    // Fixed configuration: sigma 1, n = 2^8..2^14, 1000 log-spaced lambdas in [1e-10, 1e2].
    o.sigma = 1.0;
    o.n_grid = "256,512,1024,2048,4096,8192,16384";
    o.lambda_min = 1e-10;
    o.lambda_max = 1e2;
    o.lambda_points = 1000;
  } else if (!o.preset.empty()) {
    throw UsageError("unknown --preset '" + o.preset + "'");
  }
  Manifest m("rates", c.seed);
  const fs::path dir = prepare_out(c);
  const std::vector<std::size_t> n_grid = parse_count_list(o.n_grid, "--n-grid");
  const LambdaGrid grid{o.lambda_min, o.lambda_max, o.lambda_points};
  RateStudyOptions options;
  options.drop_smallest = o.drop_smallest;
  options.rounding = o.rounding == "half-up" ? TruncationRounding::HalfUp : TruncationRounding::Floor;
  options.threads = threads;
  if (!o.preset.empty()) m.set("preset", o.preset);
  m.set("alpha", o.alpha);
  m.set("gamma", o.gamma);
  m.set("sigma", o.sigma);
  m.set("n_grid", join_counts(n_grid));
  m.set("lambda_grid", grid.describe());
  m.set("drop_smallest", o.drop_smallest);
  m.set("r_rounding", o.rounding);

  const RateStudyResult result = rate_study(o.alpha, o.gamma, n_grid, o.sigma, grid, options);
  const fs::path path = dir / "rates.csv";
  m.add_output(path);
  if (o.gap) {
    const std::vector<double> alphas = parse_real_list(o.alphas, "--alphas");
    const std::vector<double> sigmas = parse_real_list(o.sigmas, "--sigmas");
    m.set("gap_alphas", join_reals(alphas));
    m.set("gap_sigmas", join_reals(sigmas));
    const GapTable gap = log_mse_gap(alphas, o.gamma, sigmas, n_grid, grid, options);
    const fs::path gap_path = dir / "gap.csv";
    m.add_output(gap_path);
    write_gap_csv(gap_path, gap, m.metadata());
  }
  write_rate_study_csv(path, result, m.metadata());
  m.write(dir);
  out << "slope_tkrr=" << csv::format_double(result.slope_tkrr)
      << " (rate exponent " << csv::format_double(rate_exponent(o.gamma, o.alpha, EstimatorKind::Tkrr)) << ")\n"
      << "slope_full=" << csv::format_double(result.slope_full)
      << " (rate exponent " << csv::format_double(rate_exponent(o.gamma, o.alpha, EstimatorKind::FullKrr)) << ")\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Truncated kernel ridge regression: spectra, exact risk and rate experiments", "tkrr"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  CommonOptions common;

  CLI::App* spectrum = app.add_subcommand("spectrum", "Eigendecompose a Gaussian kernel matrix");
  add_common(*spectrum, common);
  SourceOptions spectrum_source;
  add_kernel_flags(*spectrum, spectrum_source);

  MseOptions mse_opts;
  CLI::App* mse = app.add_subcommand("mse", "Exact expected MSE for one (lambda, r, sigma)");
  add_common(*mse, common);
  SourceOptions mse_source;
  AlignmentOptions mse_alignment;
  add_source(*mse, mse_source);
  add_alignment(*mse, mse_alignment);
  mse->add_option("--lambda", mse_opts.lambda, "Ridge penalty")->required()->check(CLI::NonNegativeNumber);
  mse->add_option("--r", mse_opts.r, "Truncation level, an integer or 'n'")->required();
  mse->add_option("--sigma", mse_opts.sigma, "Noise standard deviation")->required()->check(CLI::NonNegativeNumber);
  mse->add_flag("--check-mc", mse_opts.check_mc, "Cross-check against a Monte Carlo estimate");
  mse->add_option("--trials", mse_opts.trials, "Monte Carlo trials")->capture_default_str();

  CurveOptions curve_opts;
  CLI::App* curve = app.add_subcommand("curve", "MSE along lambda or r for several noise levels");
  add_common(*curve, common);
  SourceOptions curve_source;
  AlignmentOptions curve_alignment;
  add_source(*curve, curve_source);
  add_alignment(*curve, curve_alignment);
  curve->add_option("--axis", curve_opts.axis, "Sweep axis")
      ->check(CLI::IsMember({"lambda", "r"}))
      ->capture_default_str();
  curve->add_option("--r", curve_opts.r, "Fixed truncation for --axis lambda")->capture_default_str();
  curve->add_option("--lambda-grid", curve_opts.lambda_grid, "Lambda grid for --axis lambda")->capture_default_str();
  curve->add_option("--sigmas", curve_opts.sigmas, "Noise levels for --axis lambda")->capture_default_str();
  curve->add_option("--lambda", curve_opts.lambda, "Fixed lambda for --axis r")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  curve->add_option("--r-range", curve_opts.r_range, "Truncation range lo:hi for --axis r (default 1:n)");
  curve->add_option("--sigma-over-sqrtn", curve_opts.sigma_over_sqrtn, "Noise levels sigma/sqrt(n) for --axis r")
      ->capture_default_str();

  SurfaceOptions surface_opts;
  CLI::App* surf = app.add_subcommand("surface", "MSE over a two-parameter grid");
  add_common(*surf, common);
  SourceOptions surf_source;
  AlignmentOptions surf_alignment;
  add_source(*surf, surf_source);
  add_alignment(*surf, surf_alignment);
  surf->add_option("--axis1", surface_opts.axis1, "Row axis, name=grid")->required();
  surf->add_option("--axis2", surface_opts.axis2, "Column axis, name=grid")->required();
  surf->add_option("--lambda", surface_opts.lambda, "Fixed lambda when not swept");
  surf->add_option("--r", surface_opts.r, "Fixed truncation when not swept");
  surf->add_option("--sigma", surface_opts.sigma, "Fixed sigma when no noise axis is swept");

  RatesOptions rates_opts;
  CLI::App* rates = app.add_subcommand("rates", "Convergence-rate study on polynomial spectra");
  add_common(*rates, common);
  rates->add_option("--alpha", rates_opts.alpha, "Eigenvalue decay")->capture_default_str();
  rates->add_option("--gamma", rates_opts.gamma, "Alignment exponent")->capture_default_str();
  rates->add_option("--sigma", rates_opts.sigma, "Noise level")->capture_default_str();
  rates->add_option("--n-grid", rates_opts.n_grid, "Sample sizes")->capture_default_str();
  rates->add_option("--lambda-min", rates_opts.lambda_min)->capture_default_str();
  rates->add_option("--lambda-max", rates_opts.lambda_max)->capture_default_str();
  rates->add_option("--lambda-points", rates_opts.lambda_points)->capture_default_str();
  rates->add_option("--preset", rates_opts.preset, "Named configuration")->check(CLI::IsMember({"paper"}));
  rates->add_option("--drop-smallest", rates_opts.drop_smallest, "Sample sizes left out of the slope fit")
      ->capture_default_str();
  rates->add_option("--r-rounding", rates_opts.rounding, "Rounding of the closed-form r*")
      ->check(CLI::IsMember({"floor", "half-up"}))
      ->capture_default_str();
  rates->add_flag("--gap", rates_opts.gap, "Also write the log-MSE gap table");
  rates->add_option("--alphas", rates_opts.alphas, "Alphas for the gap table")->capture_default_str();
  rates->add_option("--sigmas", rates_opts.sigmas, "Sigmas for the gap table")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kUsage;
  }

  common.diagnostics = &err;
  try {
    if (spectrum->parsed()) return cmd_spectrum(common, spectrum_source, out);
    if (mse->parsed()) return cmd_mse(common, mse_source, mse_alignment, mse_opts, out);
    if (curve->parsed()) return cmd_curve(common, curve_source, curve_alignment, curve_opts, out);
    if (surf->parsed()) return cmd_surface(common, surf_source, surf_alignment, surface_opts, out);
    if (rates->parsed()) return cmd_rates(common, rates_opts, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const InvalidArgument& e) {
    err << "invalid argument: " << e.what() << "\n";
    return kUsage;
  } catch (const DegeneracyError& e) {
    err << "degenerate problem: " << e.what() << "\n";
    return kNumerical;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kIo;
  }
  return kUsage;
}

}  // namespace tkrr::cli
