#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "wtv/bounds.hpp"
#include "wtv/distributions.hpp"

namespace wtv {

enum class Perturbation { Translate, Scale, MixtureWeight, SmoothedSequence };
std::string to_string(Perturbation k);
Perturbation perturbation_from_string(const std::string& s);

/// A one-parameter family of pairs (a, b_h) swept over h.
///
/// translate:         b_h = a + h
/// scale:             b_h = (1 + h) a
/// mixture-weight:    b_h moves the fraction h of component 0's weight onto component 1
/// smoothed-sequence: a = base * N(0, sigma^2), b_h = ((1 - h) base + h noise) * N(0, sigma^2)
struct Scenario {
    std::string name;
    GaussianMixture base = GaussianMixture::normal(0.0, 1.0);
    Perturbation kind = Perturbation::Translate;
    std::vector<double> h;
    BoundParams params;
    double sigma = 1.0;                     ///< smoothing scale (smoothed-sequence)
    std::optional<GaussianMixture> noise;   ///< contaminating law (smoothed-sequence), default N(0,1)
    MultiIndex alpha{};                     ///< derivative of the pointwise certificate
    double lemma2_r = 1.0;                  ///< exponential-moment rate of the lemma2 certificate
    std::size_t grid_n = 0;                 ///< envelope grid nodes per axis, 0 = default
    std::uint64_t seed = 0;
    bool entropic_check = false;            ///< add an entropic W_q cross-check column (JSON only)

    /// Throws PreconditionError unless the name is non-empty, h is non-empty, positive and
    /// strictly decreasing, d = 1, and the kind fits the base law.
    void validate() const;
    /// The pair (a, b_h).
    std::pair<GaussianMixture, GaussianMixture> pair_at(double h) const;
};

struct SweepRow {
    double h = 0.0;
    double A = 0.0;
    double rho_p = 0.0;
    double tv = 0.0;
    double rhs1 = 0.0;
    double rhs2 = 0.0;
    double psup = 0.0;
    double prhs = 0.0;
    bool ok1 = false;
    bool ok2 = false;
    bool okp = false;
    std::string lemma2_branch;
    std::optional<double> entropic;
    std::string error;  ///< non-empty when the row failed

    bool failed() const { return !error.empty(); }
    bool operator==(const SweepRow&) const = default;
};

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
    std::size_t n = 0;
    bool operator==(const RateFit&) const = default;
};

struct SweepReport {
    std::string scenario;
    BoundParams params;
    std::vector<SweepRow> rows;
    std::optional<RateFit> fit;
    std::uint64_t seed = 0;
    std::size_t grid_n = 0;
    std::string version;

    std::size_t failed_rows() const;
    /// True when more than 20% of the rows failed.
    bool failed() const;
    /// True when every successful row with A <= 1 satisfies all three certificates.
    bool certificates_hold() const;
};

bool operator==(const SweepReport& a, const SweepReport& b);

/// Ordinary least squares of ln y on ln x. Throws PreconditionError with fewer than 3 points
/// or non-positive data.
RateFit fit_rate(const std::vector<double>& x, const std::vector<double>& y);
/// Fit of ln rho_p on ln A over successful rows with 0 < A <= 1.
RateFit fit_rate(const std::vector<SweepRow>& rows);

/// Runs every h of the scenario. A failing row records its error; the report carries the
/// fit when at least 3 rows qualify.
SweepReport run_sweep(const Scenario& sc);

enum class ReportFormat { Csv, Json, Svg };
/// Parses "csv,json,svg"; throws PreconditionError on unknown names.
std::vector<ReportFormat> parse_formats(const std::string& list);

/// Writes <dir>/<scenario>.{csv,json,svg}. Returns the written paths. Throws Error on I/O failure.
std::vector<std::filesystem::path> emit_report(const SweepReport& report, const std::filesystem::path& dir,
                                               const std::vector<ReportFormat>& formats);

std::string report_csv(const SweepReport& report);
std::string report_svg(const SweepReport& report);

}  // namespace wtv
