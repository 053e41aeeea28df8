#include "hoicraft/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <boost/math/special_functions/gamma.hpp>

#include "hoicraft/error.hpp"

namespace hoicraft {

void RankMatrix::validate() const {
  const std::size_t k = cols();
  const double expected = static_cast<double>(k * (k + 1)) / 2.0;
  for (const auto& row : values) {
    if (row.size() != k) throw Error(ErrorCode::InvalidArgument, "rank matrix rows must have equal length");
    const double sum = std::accumulate(row.begin(), row.end(), 0.0);
    if (std::abs(sum - expected) > 1e-9) {
      throw Error(ErrorCode::InvalidArgument, "rank row does not sum to k(k+1)/2");
    }
  }
}

std::vector<double> average_ranks(std::span<const double> row) {
  std::vector<std::size_t> order(row.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return row[a] < row[b]; });
  std::vector<double> ranks(row.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && row[order[j + 1]] == row[order[i]]) ++j;
    const double avg = (static_cast<double>(i + j) / 2.0) + 1.0;
    for (std::size_t m = i; m <= j; ++m) ranks[order[m]] = avg;
    i = j + 1;
  }
  return ranks;
}

RankMatrix rank_rows(const std::vector<std::vector<double>>& scores, bool higher_is_better) {
  RankMatrix m;
  for (const auto& row : scores) {
    std::vector<double> keyed(row);
    if (higher_is_better) {
      for (auto& v : keyed) v = -v;
    }
    m.values.push_back(average_ranks(keyed));
  }
  return m;
}

double chi2_sf(double x, double df) {
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(df / 2.0, x / 2.0);
}

FriedmanResult friedman(const RankMatrix& m) {
  const std::size_t n = m.rows();
  const std::size_t k = m.cols();
  if (n < 2 || k < 2) throw Error(ErrorCode::InvalidArgument, "Friedman test needs n >= 2 and k >= 2");
  m.validate();

  std::vector<double> column_sums(k, 0.0);
  double tie_term = 0.0;
  for (const auto& row : m.values) {
    for (std::size_t j = 0; j < k; ++j) column_sums[j] += row[j];
    std::vector<double> sorted(row);
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < k;) {
      std::size_t j = i;
      while (j + 1 < k && sorted[j + 1] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i + 1);
      tie_term += t * t * t - t;
      i = j + 1;
    }
  }

  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  double sum_sq = 0.0;
  for (double r : column_sums) sum_sq += r * r;
  const double uncorrected = 12.0 / (nd * kd * (kd + 1.0)) * sum_sq - 3.0 * nd * (kd + 1.0);
  const double correction = 1.0 - tie_term / (nd * (kd * kd * kd - kd));
  if (correction <= 1e-12) {
    throw Error(ErrorCode::DegenerateInput, "every row is fully tied; Friedman statistic undefined");
  }

  FriedmanResult r;
  r.n = n;
  r.k = k;
  r.chi2 = std::max(0.0, uncorrected / correction);
  r.p = chi2_sf(r.chi2, kd - 1.0);
  r.kendall_w = r.chi2 / (nd * (kd - 1.0));
  return r;
}

double wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "paired samples differ in length");
  std::vector<double> diffs;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    if (d != 0.0) diffs.push_back(d);
  }
  if (diffs.size() < 5) {
    throw Error(ErrorCode::TooFewPairs, "need at least 5 non-zero paired differences, got " +
                                            std::to_string(diffs.size()));
  }

  std::vector<double> magnitudes(diffs.size());
  std::transform(diffs.begin(), diffs.end(), magnitudes.begin(), [](double d) { return std::abs(d); });
  const auto ranks = average_ranks(magnitudes);

  double w_plus = 0.0;
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    if (diffs[i] > 0.0) w_plus += ranks[i];
  }

  std::vector<double> sorted(magnitudes);
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }

  const double n = static_cast<double>(diffs.size());
  const double mean = n * (n + 1.0) / 4.0;
  const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
  if (var <= 0.0) return 1.0;
  const double z = std::max(0.0, std::abs(w_plus - mean) - 0.5) / std::sqrt(var);
  return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

std::vector<bool> benjamini_hochberg(std::span<const double> pvals, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must be in (0,1)");
  for (double p : pvals) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "p values must be in [0,1]");
  }
  const std::size_t m = pvals.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return pvals[a] < pvals[b]; });

  std::size_t cutoff = 0;  // number of rejected hypotheses
  for (std::size_t i = 0; i < m; ++i) {
    const double threshold = static_cast<double>(i + 1) / static_cast<double>(m) * alpha;
    if (pvals[order[i]] <= threshold) cutoff = i + 1;
  }
  std::vector<bool> reject(m, false);
  for (std::size_t i = 0; i < cutoff; ++i) reject[order[i]] = true;
  return reject;
}

TierList derive_tier_string(const std::vector<HOIDesignKind>& designs, std::span<const double> means,
                            const std::vector<std::vector<bool>>& sig, bool higher_is_better,
                            bool omnibus_significant) {
  const std::size_t k = designs.size();
  if (means.size() != k || sig.size() != k) {
    throw Error(ErrorCode::InvalidArgument, "means and significance matrix must match the designs");
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (sig[i].size() != k) throw Error(ErrorCode::InvalidArgument, "significance matrix must be square");
    for (std::size_t j = 0; j < k; ++j) {
      if (sig[i][j] != sig[j][i]) throw Error(ErrorCode::InvalidArgument, "significance matrix must be symmetric");
    }
  }

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return higher_is_better ? means[a] > means[b] : means[a] < means[b];
  });

  TierList out;
  if (!omnibus_significant) {
    out.tiers.emplace_back();
    for (auto i : order) out.tiers.back().push_back(designs[i]);
    return out;
  }

  std::size_t anchor = order.front();
  out.tiers.push_back({designs[anchor]});
  for (std::size_t idx = 1; idx < k; ++idx) {
    const auto i = order[idx];
    if (sig[anchor][i]) {
      anchor = i;
      out.tiers.emplace_back();
    }
    out.tiers.back().push_back(designs[i]);
  }
  return out;
}

std::string format_p_class(double p) {
  if (p < 0.001) return "p<0.001****";
  char buf[32];
  std::snprintf(buf, sizeof buf, "p=%.3f", p);
  std::string out(buf);
  if (p < 0.005) {
    out += "***";
  } else if (p < 0.01) {
    out += "**";
  } else if (p < 0.05) {
    out += "*";
  }
  return out;
}

TableRow analyze_table_row(const std::vector<HOIDesignKind>& designs,
                           const std::vector<std::vector<double>>& scores, bool higher_is_better,
                           double alpha) {
  const std::size_t k = designs.size();
  for (const auto& row : scores) {
    if (row.size() != k) throw Error(ErrorCode::InvalidArgument, "every row needs one score per design");
  }

  TableRow out;
  out.friedman = friedman(rank_rows(scores, higher_is_better));
  out.p_class = format_p_class(out.friedman.p);

  out.means.assign(k, 0.0);
  for (const auto& row : scores) {
    for (std::size_t j = 0; j < k; ++j) out.means[j] += row[j];
  }
  for (auto& m : out.means) m /= static_cast<double>(scores.size());

  std::vector<std::vector<bool>> sig(k, std::vector<bool>(k, false));
  const bool omnibus = out.friedman.p < alpha;
  if (omnibus) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<double> pvals;
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) {
        std::vector<double> a, b;
        for (const auto& row : scores) {
          a.push_back(row[i]);
          b.push_back(row[j]);
        }
        double p = 1.0;
        try {
          p = wilcoxon_signed_rank(a, b);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::TooFewPairs) throw;
        }
        pairs.emplace_back(i, j);
        pvals.push_back(p);
      }
    }
    const auto reject = benjamini_hochberg(pvals, alpha);
    for (std::size_t t = 0; t < pairs.size(); ++t) {
      sig[pairs[t].first][pairs[t].second] = reject[t];
      sig[pairs[t].second][pairs[t].first] = reject[t];
    }
  }
  out.tiers = derive_tier_string(designs, out.means, sig, higher_is_better, omnibus);
  out.tier_string = to_tier_string(out.tiers);
  return out;
}

}  // namespace hoicraft
