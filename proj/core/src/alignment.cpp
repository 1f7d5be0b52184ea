#include "tkrr/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tkrr/errors.hpp"
#include "tkrr/random.hpp"

namespace tkrr {

std::string AlignmentSpectrum::provenance() const {
  switch (kind) {
    case SpectrumKind::Empirical:
      return "empirical";
    case SpectrumKind::Bandlimited:
      return "bandlimited(b=" + std::to_string(bands.at(0).width) +
             ",ell=" + std::to_string(bands.at(0).offset) + ")";
    case SpectrumKind::Multiband: {
      std::string out = "multiband(";
      for (std::size_t i = 0; i < bands.size(); ++i) {
        if (i > 0) out += ';';
        out += std::to_string(bands[i].width) + ":" + std::to_string(bands[i].offset);
      }
      return out + ")";
    }
    case SpectrumKind::Polynomial:
      return "polynomial(alpha=" + csv::format_double(alpha) +
             ",gamma=" + csv::format_double(gamma) + ")";
  }
  return "unknown";
}

AlignmentSpectrum ta_scores(const EigenSystem& eigen, const Eigen::VectorXd& f_values) {
  if (static_cast<std::size_t>(f_values.size()) != eigen.n()) {
    throw InvalidArgument("ta_scores: expected " + std::to_string(eigen.n()) + " function values");
  }
  AlignmentSpectrum out;
  out.kind = SpectrumKind::Empirical;
  out.xi = eigen.U().transpose() * f_values / std::sqrt(static_cast<double>(eigen.n()));
  return out;
}

Eigen::VectorXd synthesize_target(const EigenSystem& eigen, const Eigen::VectorXd& xi) {
  if (static_cast<std::size_t>(xi.size()) != eigen.n()) {
    throw InvalidArgument("synthesize_target: expected " + std::to_string(eigen.n()) + " scores");
  }
  return std::sqrt(static_cast<double>(eigen.n())) * (eigen.U() * xi);
}

Eigen::VectorXd synthesize_target(const EigenSystem& eigen, const AlignmentSpectrum& spectrum) {
  return synthesize_target(eigen, spectrum.xi);
}

AlignmentSpectrum bandlimited_spectrum(std::size_t n, std::size_t b, std::size_t ell,
                                       std::uint64_t seed) {
  const Band band{b, ell};
  AlignmentSpectrum out = multiband_spectrum(n, std::span<const Band>(&band, 1), seed);
  out.kind = SpectrumKind::Bandlimited;
  return out;
}

AlignmentSpectrum multiband_spectrum(std::size_t n, std::span<const Band> bands,
                                     std::uint64_t seed) {
  if (bands.empty()) throw InvalidArgument("at least one band is required");
  std::vector<Band> sorted(bands.begin(), bands.end());
  for (const Band& band : sorted) {
    if (band.width < 1) throw InvalidArgument("band width b must be >= 1");
    if (band.offset + band.width > n) {
      throw InvalidArgument("band [" + std::to_string(band.offset + 1) + ", " +
                            std::to_string(band.offset + band.width) + "] exceeds n = " +
                            std::to_string(n));
    }
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const Band& a, const Band& b) { return a.offset < b.offset; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].offset < sorted[i - 1].offset + sorted[i - 1].width) {
      throw InvalidArgument("bands overlap");
    }
  }

  AlignmentSpectrum out;
  out.kind = bands.size() == 1 ? SpectrumKind::Bandlimited : SpectrumKind::Multiband;
  out.bands.assign(bands.begin(), bands.end());
  out.seed = seed;
  out.xi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  Rng rng(seed);
  for (const Band& band : bands) {
    for (std::size_t i = band.offset; i < band.offset + band.width; ++i) {
      out.xi(static_cast<Eigen::Index>(i)) = rng.normal();
    }
  }
  const double norm = out.xi.norm();
  if (norm == 0.0) throw NumericalFailure("all band draws were zero");
  out.xi /= norm;
  return out;
}

SyntheticSpectra polynomial_spectra(std::size_t n, double alpha, double gamma) {
  if (n < 1) throw InvalidArgument("n must be >= 1");
  if (!(alpha >= 1.0) || !std::isfinite(alpha)) throw InvalidArgument("alpha must be >= 1");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("gamma must be > 0");
  SyntheticSpectra out;
  out.alpha = alpha;
  out.gamma = gamma;
  out.mu.resize(static_cast<Eigen::Index>(n));
  out.xi_sq.resize(static_cast<Eigen::Index>(n));
  const double xi_exponent = -(2.0 * gamma * alpha + 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double idx = static_cast<double>(i + 1);
    out.mu(static_cast<Eigen::Index>(i)) = std::pow(idx, -alpha);
    out.xi_sq(static_cast<Eigen::Index>(i)) = std::pow(idx, xi_exponent);
  }
  return out;
}

AlignmentSpectrum polynomial_alignment(std::size_t n, double alpha, double gamma) {
  const SyntheticSpectra spectra = polynomial_spectra(n, alpha, gamma);
  AlignmentSpectrum out;
  out.kind = SpectrumKind::Polynomial;
  out.alpha = alpha;
  out.gamma = gamma;
  out.xi = spectra.xi();
  return out;
}

AlignmentRegime classify_regime(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("gamma must be > 0");
  if (gamma < 0.5) return AlignmentRegime::UnderAligned;
  if (gamma == 0.5) return AlignmentRegime::JustAligned;
  if (gamma <= 1.0) return AlignmentRegime::WeaklyAligned;
  return AlignmentRegime::OverAligned;
}

std::string to_string(AlignmentRegime regime) {
  switch (regime) {
    case AlignmentRegime::UnderAligned:
      return "under-aligned";
    case AlignmentRegime::JustAligned:
      return "just-aligned";
    case AlignmentRegime::WeaklyAligned:
      return "weakly-aligned";
    case AlignmentRegime::OverAligned:
      return "over-aligned";
  }
  return "unknown";
}

void write_alignment_csv(const std::filesystem::path& path, const AlignmentSpectrum& spectrum,
                         const csv::Metadata& metadata) {
  csv::Document doc;
  doc.add_metadata(metadata);
  doc.add_metadata("provenance", spectrum.provenance());
  if (spectrum.seed) doc.add_metadata("spectrum_seed", std::to_string(*spectrum.seed));
  doc.set_header({"index", "xi"});
  for (std::size_t i = 0; i < spectrum.n(); ++i) {
    doc.add_row({std::to_string(i + 1), csv::format_double(spectrum.xi(static_cast<Eigen::Index>(i)))});
  }
  doc.write(path);
}

AlignmentSpectrum read_alignment_csv(const std::filesystem::path& path) {
  const csv::Table table = csv::read(path);
  if (table.rows.empty() || table.rows.front().size() != 2 || table.rows.front()[0] != "index" ||
      table.rows.front()[1] != "xi") {
    throw IoError(path.string() + ": expected header 'index,xi'");
  }
  AlignmentSpectrum out;
  out.kind = SpectrumKind::Empirical;
  out.xi.resize(static_cast<Eigen::Index>(table.rows.size() - 1));
  for (std::size_t r = 1; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.size() != 2) throw IoError(path.string() + ": row " + std::to_string(r + 1) + " needs 2 columns");
    if (csv::parse_index(row[0]) != r) {
      throw IoError(path.string() + ": indices must run 1..n in order (row " + std::to_string(r + 1) + ")");
    }
    out.xi(static_cast<Eigen::Index>(r - 1)) = csv::parse_double(row[1]);
  }
  if (out.xi.size() == 0) throw IoError(path.string() + ": no alignment scores");
  if (const auto* seed = table.find_metadata("spectrum_seed")) out.seed = csv::parse_index(*seed);
  return out;
}

}  // namespace tkrr
