#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tkrr/spectral.hpp"

namespace tkrr {

/// Nonzero band of an alignment spectrum: 1-based indices offset+1 .. offset+width.
struct Band {
  std::size_t width = 1;   // b
  std::size_t offset = 0;  // ell
};

enum class SpectrumKind { Empirical, Bandlimited, Multiband, Polynomial };

/// Target-alignment scores xi = U^T S_x(f) and where they came from.
struct AlignmentSpectrum {
  Eigen::VectorXd xi;
  SpectrumKind kind = SpectrumKind::Empirical;
  std::vector<Band> bands;
  double alpha = 0.0;
  double gamma = 0.0;
  std::optional<std::uint64_t> seed;

  [[nodiscard]] std::size_t n() const { return static_cast<std::size_t>(xi.size()); }
  /// e.g. "bandlimited(b=10,ell=20)" or "polynomial(alpha=1,gamma=10)".
  [[nodiscard]] std::string provenance() const;
};

/// mu_i = i^-alpha and (xi_i)^2 = i^-(2 gamma alpha + 1), all constants 1.
struct SyntheticSpectra {
  Eigen::VectorXd mu;
  Eigen::VectorXd xi_sq;
  double alpha = 1.0;
  double gamma = 1.0;

  [[nodiscard]] std::size_t n() const { return static_cast<std::size_t>(mu.size()); }
  /// Nonnegative square roots of xi_sq.
  [[nodiscard]] Eigen::VectorXd xi() const { return xi_sq.cwiseSqrt(); }
};

enum class AlignmentRegime { UnderAligned, JustAligned, WeaklyAligned, OverAligned };

/// xi = U^T (f_values / sqrt(n)).
AlignmentSpectrum ta_scores(const EigenSystem& eigen, const Eigen::VectorXd& f_values);

/// Inverse of ta_scores: sqrt(n) U xi.
Eigen::VectorXd synthesize_target(const EigenSystem& eigen, const Eigen::VectorXd& xi);
Eigen::VectorXd synthesize_target(const EigenSystem& eigen, const AlignmentSpectrum& spectrum);

/// i.i.d. N(0,1) entries on one band, zero elsewhere, scaled to unit norm.
AlignmentSpectrum bandlimited_spectrum(std::size_t n, std::size_t b, std::size_t ell,
                                       std::uint64_t seed);

/// Same construction over a union of non-overlapping bands. Bands are filled
/// in the order given, so a single band reproduces bandlimited_spectrum.
AlignmentSpectrum multiband_spectrum(std::size_t n, std::span<const Band> bands,
                                     std::uint64_t seed);

SyntheticSpectra polynomial_spectra(std::size_t n, double alpha, double gamma);

/// Polynomially decaying scores xi_i = i^-(gamma alpha + 1/2) to pair with an
/// empirical eigen system. Deliberately not normalized.
AlignmentSpectrum polynomial_alignment(std::size_t n, double alpha, double gamma);

/// gamma = 1/2 is reported as JustAligned; the boundary label is a convention.
AlignmentRegime classify_regime(double gamma);
std::string to_string(AlignmentRegime regime);

/// Two columns (index, xi) with 1-based indices; provenance and seed in the header.
void write_alignment_csv(const std::filesystem::path& path, const AlignmentSpectrum& spectrum,
                         const csv::Metadata& metadata = {});
AlignmentSpectrum read_alignment_csv(const std::filesystem::path& path);

}  // namespace tkrr
