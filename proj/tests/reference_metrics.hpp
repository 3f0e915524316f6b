#pragma once

// Slow, independently written reference versions of the four metrics. They
// work on plain nested vectors and share no code with the library kernels.

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace samu::reference {

using Grid = std::vector<std::vector<double>>;  // [row][col]

inline double dice(const Grid& pred, const Grid& gt) {
    double inter = 0, a = 0, b = 0;
    for (std::size_t y = 0; y < gt.size(); ++y)
        for (std::size_t x = 0; x < gt[y].size(); ++x) {
            a += pred[y][x];
            b += gt[y][x];
            inter += pred[y][x] * gt[y][x];
        }
    return a + b == 0 ? 1.0 : 2 * inter / (a + b);
}

inline double ece(const Grid& prob, const Grid& gt, int bins = 10) {
    double total = 0, n = 0;
    for (const auto& row : gt) n += static_cast<double>(row.size());
    const double width = 0.5 / bins;
    for (int b = 0; b < bins; ++b) {
        const double lo = 0.5 + b * width, hi = 0.5 + (b + 1) * width;
        double count = 0, conf = 0, acc = 0;
        for (std::size_t y = 0; y < gt.size(); ++y)
            for (std::size_t x = 0; x < gt[y].size(); ++x) {
                const double p = prob[y][x];
                const double c = p > 1 - p ? p : 1 - p;
                const bool member = (c > lo && c <= hi) || (b == 0 && c == 0.5);
                if (!member) continue;
                count += 1;
                conf += c;
                acc += ((p >= 0.5 ? 1.0 : 0.0) == gt[y][x]) ? 1.0 : 0.0;
            }
        if (count > 0) total += count / n * std::fabs(acc / count - conf / count);
    }
    return total;
}

// ---- structure measure ----

inline double object_term(const std::vector<double>& xs) {
    if (xs.empty()) return 0;
    double mean = 0;
    for (double v : xs) mean += v;
    mean /= xs.size();
    double var = 0;
    for (double v : xs) var += (v - mean) * (v - mean);
    const double sd = xs.size() > 1 ? std::sqrt(var / (xs.size() - 1)) : 0.0;
    return 2 * mean / (mean * mean + 1 + sd + std::numeric_limits<double>::epsilon());
}

inline double ssim_block(const std::vector<double>& p, const std::vector<double>& g) {
    const double eps = std::numeric_limits<double>::epsilon();
    const double n = static_cast<double>(p.size());
    double mp = 0, mg = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        mp += p[i];
        mg += g[i];
    }
    mp /= n;
    mg /= n;
    double vp = 0, vg = 0, cov = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        vp += (p[i] - mp) * (p[i] - mp);
        vg += (g[i] - mg) * (g[i] - mg);
        cov += (p[i] - mp) * (g[i] - mg);
    }
    vp /= n - 1 + eps;
    vg /= n - 1 + eps;
    cov /= n - 1 + eps;
    const double num = 4 * mp * mg * cov;
    const double den = (mp * mp + mg * mg) * (vp + vg);
    if (num != 0) return num / (den + eps);
    return den == 0 ? 1.0 : 0.0;
}

inline double s_measure(const Grid& prob, const Grid& gt, double alpha = 0.5) {
    const std::size_t h = gt.size(), w = gt[0].size();
    double fg = 0, mean_p = 0;
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            fg += gt[y][x];
            mean_p += prob[y][x];
        }
    mean_p /= static_cast<double>(w * h);
    if (fg == 0) return 1 - mean_p;
    if (fg == static_cast<double>(w * h)) return mean_p;

    std::vector<double> in_fg, in_bg;
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            (gt[y][x] == 1 ? in_fg : in_bg).push_back(gt[y][x] == 1 ? prob[y][x] : 1 - prob[y][x]);
    const double u = fg / static_cast<double>(w * h);
    const double s_obj = u * object_term(in_fg) + (1 - u) * object_term(in_bg);

    // Split point: rounded 1-based centroid = number of leading columns/rows.
    double sx = 0, sy = 0;
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            if (gt[y][x] == 1) {
                sx += static_cast<double>(x) + 1;
                sy += static_cast<double>(y) + 1;
            }
    const std::size_t X = static_cast<std::size_t>(std::lround(sx / fg));
    const std::size_t Y = static_cast<std::size_t>(std::lround(sy / fg));
    const std::size_t xs[3] = {0, X, w}, ys[3] = {0, Y, h};
    double s_reg = 0;
    for (int by = 0; by < 2; ++by)
        for (int bx = 0; bx < 2; ++bx) {
            std::vector<double> p, g;
            for (std::size_t y = ys[by]; y < ys[by + 1]; ++y)
                for (std::size_t x = xs[bx]; x < xs[bx + 1]; ++x) {
                    p.push_back(prob[y][x]);
                    g.push_back(gt[y][x]);
                }
            if (p.empty()) continue;
            s_reg += static_cast<double>(p.size()) / static_cast<double>(w * h) * ssim_block(p, g);
        }
    const double q = alpha * s_obj + (1 - alpha) * s_reg;
    return q < 0 ? 0 : (q > 1 ? 1 : q);
}

// ---- weighted F-measure ----

inline double weighted_fmeasure(const Grid& prob, const Grid& gt, double beta2 = 1.0) {
    const long h = static_cast<long>(gt.size()), w = static_cast<long>(gt[0].size());
    double n_fg = 0;
    for (const auto& row : gt)
        for (double v : row) n_fg += v;
    if (n_fg == 0) {
        for (const auto& row : prob)
            for (double v : row)
                if (v != 0) return 0.0;
        return 1.0;
    }

    Grid err(h, std::vector<double>(w)), src(h, std::vector<double>(w)), dist(h, std::vector<double>(w, 0));
    for (long y = 0; y < h; ++y)
        for (long x = 0; x < w; ++x) err[y][x] = std::fabs(prob[y][x] - gt[y][x]);

    // Brute-force nearest foreground pixel; scanning in row-major order with a
    // strict comparison keeps the lowest index on ties.
    for (long y = 0; y < h; ++y)
        for (long x = 0; x < w; ++x) {
            if (gt[y][x] == 1) {
                src[y][x] = err[y][x];
                continue;
            }
            long best = std::numeric_limits<long>::max(), by = 0, bx = 0;
            for (long yy = 0; yy < h; ++yy)
                for (long xx = 0; xx < w; ++xx)
                    if (gt[yy][xx] == 1) {
                        const long d = (yy - y) * (yy - y) + (xx - x) * (xx - x);
                        if (d < best) {
                            best = d;
                            by = yy;
                            bx = xx;
                        }
                    }
            src[y][x] = err[by][bx];
            dist[y][x] = std::sqrt(static_cast<double>(best));
        }

    double ksum = 0;
    double k[7][7];
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 7; ++j) ksum += (k[i][j] = std::exp(-((i - 3) * (i - 3) + (j - 3) * (j - 3)) / 50.0));

    double fg_err = 0, bg_err = 0;
    for (long y = 0; y < h; ++y)
        for (long x = 0; x < w; ++x) {
            if (gt[y][x] == 1) {
                double ea = 0;
                for (int i = 0; i < 7; ++i)
                    for (int j = 0; j < 7; ++j) {
                        const long yy = y + i - 3, xx = x + j - 3;
                        if (yy >= 0 && yy < h && xx >= 0 && xx < w) ea += k[i][j] / ksum * src[yy][xx];
                    }
                fg_err += ea < err[y][x] ? ea : err[y][x];
            } else {
                bg_err += err[y][x] * (2 - std::exp(std::log(0.5) / 5 * dist[y][x]));
            }
        }
    const double tp = n_fg - fg_err;
    const double r = 1 - fg_err / n_fg;
    const double p = tp + bg_err > 0 ? tp / (tp + bg_err) : 0;
    const double den = beta2 * p + r;
    if (den <= 0) return 0;
    const double f = (1 + beta2) * p * r / den;
    return f < 0 ? 0 : (f > 1 ? 1 : f);
}

} // namespace samu::reference
