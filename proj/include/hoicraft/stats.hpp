#pragma once

#include <span>
#include <string>
#include <vector>

#include "hoicraft/empirical.hpp"

namespace hoicraft {

/// n x k within-row ranks, ties as average ranks.
struct RankMatrix {
  std::vector<std::vector<double>> values;

  std::size_t rows() const { return values.size(); }
  std::size_t cols() const { return values.empty() ? 0 : values.front().size(); }
  /// Throws InvalidArgument when rows are ragged or a row does not sum to k(k+1)/2.
  void validate() const;
};

/// Average ranks (1 = smallest) of one row.
std::vector<double> average_ranks(std::span<const double> row);
/// Ranks each row of raw scores. With higher_is_better, rank 1 goes to the
/// largest score.
RankMatrix rank_rows(const std::vector<std::vector<double>>& scores, bool higher_is_better = false);

struct FriedmanResult {
  double chi2 = 0.0;
  double p = 1.0;
  double kendall_w = 0.0;
  std::size_t n = 0;
  std::size_t k = 0;
};

/// Friedman chi-square with tie correction, chi-square tail p (df = k-1) and
/// Kendall's W = chi2 / (n (k-1)). Throws DegenerateInput when every row is
/// fully tied.
FriedmanResult friedman(const RankMatrix& m);

/// Chi-square upper tail probability.
double chi2_sf(double x, double df);

/// Two-sided Wilcoxon signed-rank p value: normal approximation with tie and
/// continuity corrections. Zero differences are dropped; fewer than 5
/// remaining pairs throws TooFewPairs.
double wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y);

/// Step-up false discovery rate control; flags are in input order.
std::vector<bool> benjamini_hochberg(std::span<const double> pvals, double alpha);

/// Groups designs into tiers. Designs are sorted by mean (descending when
/// higher is better); a new tier starts whenever a design differs
/// significantly from the first member of the current tier. A non-significant
/// omnibus test yields a single tier.
TierList derive_tier_string(const std::vector<HOIDesignKind>& designs, std::span<const double> means,
                            const std::vector<std::vector<bool>>& sig, bool higher_is_better,
                            bool omnibus_significant = true);

/// "p<0.001****", "p=0.003***", "p=0.097" in the published style.
std::string format_p_class(double p);

struct TableRow {
  FriedmanResult friedman;
  std::string p_class;
  TierList tiers;
  std::string tier_string;
  std::vector<double> means;
};

/// Friedman omnibus, then pairwise Wilcoxon tests controlled with
/// Benjamini-Hochberg (one family per call), then tier grouping.
/// `scores` is n participants x k designs (ranks or Likert ratings).
TableRow analyze_table_row(const std::vector<HOIDesignKind>& designs,
                           const std::vector<std::vector<double>>& scores, bool higher_is_better,
                           double alpha = 0.05);

}  // namespace hoicraft
