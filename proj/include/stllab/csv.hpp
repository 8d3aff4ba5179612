// Result rows and their CSV serialization, plus the summary/aggregation
// helpers used by the command line.
//
// CSV contract: header `experiment,seed,generation,n,alpha,lambda,metric,value`,
// RFC-4180 quoting, rows sorted by (experiment, seed, generation, metric),
// floats rendered with 17 significant digits (fixed width, not shortest
// round-trip).  Non-finite values are written as the literal `nan` and
// counted.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace stllab {

struct ResultRow {
    std::string experiment;
    std::uint64_t seed = 0;       // run index within the experiment
    long long generation = 0;
    long long n = 0;
    double alpha = 0.0;
    double lambda = 0.0;
    std::string metric;
    double value = 0.0;

    bool operator==(const ResultRow&) const = default;
};

inline std::string format_g17(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%#.17g", v);
    return buf;
}

inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline void sort_rows(std::vector<ResultRow>& rows) {
    std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
        return std::tie(a.experiment, a.seed, a.generation, a.metric, a.n, a.alpha, a.lambda) <
               std::tie(b.experiment, b.seed, b.generation, b.metric, b.n, b.alpha, b.lambda);
    });
}

// Returns the number of non-finite values written (the warning counter).
inline std::size_t write_csv(std::vector<ResultRow> rows, std::ostream& os) {
    sort_rows(rows);
    os << "experiment,seed,generation,n,alpha,lambda,metric,value\n";
    std::size_t warnings = 0;
    for (const auto& r : rows) {
        if (!std::isfinite(r.value)) ++warnings;
        os << csv_quote(r.experiment) << ',' << r.seed << ',' << r.generation << ',' << r.n << ','
           << format_g17(r.alpha) << ',' << format_g17(r.lambda) << ',' << csv_quote(r.metric)
           << ',' << format_g17(r.value) << "\n";
    }
    return warnings;
}

inline std::string to_csv(const std::vector<ResultRow>& rows) {
    std::ostringstream os;
    write_csv(rows, os);
    return os.str();
}

namespace detail {
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}
}  // namespace detail

inline std::vector<ResultRow> read_csv(std::istream& is) {
    std::vector<ResultRow> rows;
    std::string line;
    if (!std::getline(is, line)) return rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != 8) throw std::runtime_error("read_csv: expected 8 fields, got " +
                                                    std::to_string(f.size()));
        ResultRow r;
        r.experiment = f[0];
        r.seed = std::stoull(f[1]);
        r.generation = std::stoll(f[2]);
        r.n = std::stoll(f[3]);
        r.alpha = std::stod(f[4]);
        r.lambda = std::stod(f[5]);
        r.metric = f[6];
        r.value = f[7] == "nan" ? std::nan("") : std::stod(f[7]);
        rows.push_back(std::move(r));
    }
    return rows;
}

// ---- aggregation ----------------------------------------------------------

struct GroupStats {
    std::size_t count = 0;
    double mean = 0.0;
    double median = 0.0;
    double p95 = 0.0;
};

inline GroupStats group_stats(std::vector<double> v) {
    GroupStats g;
    g.count = v.size();
    if (v.empty()) return g;
    double s = 0;
    for (double x : v) s += x;
    g.mean = s / static_cast<double>(v.size());
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    g.median = n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    const std::size_t rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
    g.p95 = v[std::max<std::size_t>(rank, 1) - 1];
    return g;
}

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 1.0;
};

// Straight least squares of y on x with the coefficient of determination.
inline SlopeFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("least_squares: need at least two points");
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw std::invalid_argument("least_squares: degenerate x");
    SlopeFit f;
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    const double ym = sy / n;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double pred = f.intercept + f.slope * x[i];
        ss_res += (y[i] - pred) * (y[i] - pred);
        ss_tot += (y[i] - ym) * (y[i] - ym);
    }
    f.r2 = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
    return f;
}

inline double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<double>(i + 1);
        return r;
    };
    const auto rx = ranks(x), ry = ranks(y);
    const auto n = static_cast<double>(x.size());
    double d2 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
    return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

// Keys usable in `summarize` grouping.
inline std::string row_key_value(const ResultRow& r, const std::string& key) {
    if (key == "experiment") return r.experiment;
    if (key == "seed") return std::to_string(r.seed);
    if (key == "generation") return std::to_string(r.generation);
    if (key == "n") return std::to_string(r.n);
    if (key == "alpha") return format_g17(r.alpha);
    if (key == "lambda") return format_g17(r.lambda);
    if (key == "metric") return r.metric;
    throw std::invalid_argument("summarize: unknown group key '" + key + "'");
}

// Per-group mean/median/p95 plus optional log-log (or semi-log) slope fits
// and empirical-to-bound mean ratios for metric pairs m / m_bound*.
inline std::string summarize(const std::vector<ResultRow>& rows,
                             const std::vector<std::string>& group_keys,
                             const std::string& slope_x = "") {
    if (rows.empty()) throw std::invalid_argument("summarize: no rows");
    std::map<std::vector<std::string>, std::vector<double>> groups;
    for (const auto& r : rows) {
        std::vector<std::string> key;
        for (const auto& k : group_keys) key.push_back(row_key_value(r, k));
        groups[key].push_back(r.value);
    }
    if (groups.empty()) throw std::invalid_argument("summarize: requested group absent");
    std::ostringstream os;
    os << "group(";
    for (std::size_t i = 0; i < group_keys.size(); ++i)
        os << (i ? "," : "") << group_keys[i];
    os << ")  count  mean  median  p95\n";
    for (const auto& [key, vals] : groups) {
        const auto g = group_stats(vals);
        std::string label;
        for (std::size_t i = 0; i < key.size(); ++i) label += (i ? "," : "") + key[i];
        os << label << "  " << g.count << "  " << format_g17(g.mean) << "  "
           << format_g17(g.median) << "  " << format_g17(g.p95) << "\n";
    }

    // empirical-to-bound ratios: for metric m with sibling m + "_bound*",
    // ratio of means within (experiment, n, alpha, lambda, generation)
    std::map<std::tuple<std::string, long long, long long, double, double, std::string>,
             std::pair<double, std::size_t>>
        metric_means;
    for (const auto& r : rows) {
        auto& acc = metric_means[{r.experiment, r.n, r.generation, r.alpha, r.lambda, r.metric}];
        acc.first += r.value;
        acc.second += 1;
    }
    bool header = false;
    for (const auto& [key, acc] : metric_means) {
        const auto& metric = std::get<5>(key);
        for (const char* suffix : {"_bound_full", "_bound_theorem", "_bound"}) {
            auto bk = key;
            std::get<5>(bk) = metric + suffix;
            const auto it = metric_means.find(bk);
            if (it == metric_means.end()) continue;
            if (!header) {
                os << "\nempirical-to-bound mean ratios\n";
                header = true;
            }
            const double emp = acc.first / static_cast<double>(acc.second);
            const double bound = it->second.first / static_cast<double>(it->second.second);
            os << std::get<0>(key) << " n=" << std::get<1>(key) << " gen=" << std::get<2>(key)
               << " alpha=" << format_g17(std::get<3>(key)) << " " << metric << suffix << ": "
               << format_g17(bound == 0.0 ? std::nan("") : emp / bound) << "\n";
        }
    }

    if (!slope_x.empty()) {
        if (slope_x != "n" && slope_x != "generation")
            throw std::invalid_argument("summarize: slope axis must be n or generation");
        os << "\nslope fits (log value vs " << (slope_x == "n" ? "log n" : "generation") << ")\n";
        // mean value per (experiment, metric, x)
        std::map<std::pair<std::string, std::string>, std::map<double, std::pair<double, std::size_t>>>
            curves;
        for (const auto& r : rows) {
            const double x = slope_x == "n" ? static_cast<double>(r.n)
                                            : static_cast<double>(r.generation);
            auto& acc = curves[{r.experiment, r.metric}][x];
            acc.first += r.value;
            acc.second += 1;
        }
        for (const auto& [key, pts] : curves) {
            if (pts.size() < 2) continue;
            std::vector<double> xs, ys;
            bool ok = true;
            for (const auto& [x, acc] : pts) {
                const double mean = acc.first / static_cast<double>(acc.second);
                if (!(mean > 0.0) || (slope_x == "n" && !(x > 0.0))) {
                    ok = false;
                    break;
                }
                xs.push_back(slope_x == "n" ? std::log(x) : x);
                ys.push_back(std::log(mean));
            }
            if (!ok) continue;
            const auto fit = least_squares(xs, ys);
            os << key.first << " " << key.second << ": slope=" << format_g17(fit.slope)
               << " R2=" << format_g17(fit.r2) << "\n";
        }
    }
    return os.str();
}

}  // namespace stllab
