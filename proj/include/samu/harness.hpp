#pragma once

// Experiment runner: modes x degradation settings over a dataset directory,
// with per-image records and aggregate tables.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "samu/colormap.hpp"
#include "samu/degradation.hpp"
#include "samu/external_backend.hpp"
#include "samu/fusion.hpp"
#include "samu/image_io.hpp"
#include "samu/metrics.hpp"
#include "samu/prompts.hpp"
#include "samu/segmenter.hpp"
#include "samu/uncertainty.hpp"

namespace samu {

enum class Mode { Everything, Box, Multibox };

inline std::string to_string(Mode m) {
    switch (m) {
        case Mode::Everything: return "everything";
        case Mode::Box: return "box";
        case Mode::Multibox: return "multibox";
    }
    return "?";
}

inline Mode parse_mode(std::string_view s) {
    if (s == "everything") return Mode::Everything;
    if (s == "box") return Mode::Box;
    if (s == "multibox") return Mode::Multibox;
    throw InvalidArgument("unknown mode '" + std::string(s) + "' (expected everything|box|multibox)");
}

/// One degradation setting: "clean", "gaussian:<sigma>" or "code:<bits>".
struct DegradationSetting {
    enum class Kind { Clean, Gaussian, Coded };
    Kind kind = Kind::Clean;
    double sigma = 0.0;
    DegradationCode code;

    static DegradationSetting clean() { return {}; }
    static DegradationSetting gaussian(double sigma) {
        if (!(sigma >= 0.0)) throw InvalidArgument("gaussian sigma must be >= 0");
        return {Kind::Gaussian, sigma, {}};
    }
    static DegradationSetting coded(const DegradationCode& c) { return {Kind::Coded, 0.0, c}; }

    static DegradationSetting parse(std::string_view s) {
        if (s == "clean") return clean();
        if (s.starts_with("gaussian:")) {
            const std::string v(s.substr(9));
            std::size_t used = 0;
            double sigma = 0.0;
            try {
                sigma = std::stod(v, &used);
            } catch (const std::logic_error&) {
                used = 0;
            }
            if (used == 0 || used != v.size()) throw InvalidArgument("bad gaussian sigma in '" + std::string(s) + "'");
            return gaussian(sigma);
        }
        if (s.starts_with("code:")) return coded(DegradationCode::parse(s.substr(5)));
        throw InvalidArgument("unknown degradation '" + std::string(s) +
                              "' (expected clean|gaussian:<sigma>|code:<bits>)");
    }

    std::string label() const {
        switch (kind) {
            case Kind::Clean: return "clean";
            case Kind::Gaussian: {
                char buf[64];
                std::snprintf(buf, sizeof buf, "gaussian:%g", sigma);
                return buf;
            }
            case Kind::Coded: return "code:" + code.str();
        }
        return "?";
    }

    Image apply(const Image& img, DegradationParams params, std::uint64_t seed) const {
        params.seed = seed;
        switch (kind) {
            case Kind::Clean: return img;
            case Kind::Gaussian: return add_gaussian_noise(img, sigma, seed);
            case Kind::Coded: return degrade(img, code, params);
        }
        return img;
    }
};

struct BackendSpec {
    enum class Kind { Synthetic, External };
    Kind kind = Kind::Synthetic;
    double sigma_blur = 1.5;
    double kappa = 4.0;
    int distractors = 3;
    std::string command;
    std::string label;  ///< free text, e.g. the backbone name behind the protocol
};

struct ExperimentConfig {
    std::filesystem::path dataset_dir;
    std::vector<Mode> modes{Mode::Everything, Mode::Box, Mode::Multibox};
    std::vector<DegradationSetting> degradations{DegradationSetting::clean()};
    PromptConfig prompts;
    DegradationParams degradation_params;
    BackendSpec backend;
    std::uint64_t seed = 0;
    std::filesystem::path out_dir = "out";
    float threshold = kDefaultThreshold;
    bool artifacts = true;
    bool timing = false;  ///< record wall time; off keeps runs.csv byte-reproducible
    int jobs = 1;

    void validate() const {
        if (modes.empty()) throw InvalidArgument("no modes configured");
        if (degradations.empty()) throw InvalidArgument("no degradation settings configured");
        prompts.validate();
        degradation_params.validate();
        if (jobs < 1) throw InvalidArgument("jobs must be >= 1");
        if (backend.kind == BackendSpec::Kind::External && backend.command.empty())
            throw InvalidArgument("external backend needs a command");
    }
};

struct RunRecord {
    std::string image_id;
    Mode mode = Mode::Box;
    std::string degradation;
    MetricReport metrics;
    int m_used = 0;
    double wall_time_s = 0.0;
    std::optional<std::size_t> selected;  ///< everything mode: chosen candidate
};

struct FailureRecord {
    std::string image_id;
    Mode mode = Mode::Box;
    std::string degradation;
    std::string error;
};

struct DatasetItem {
    std::string id;
    std::filesystem::path image;
    std::filesystem::path mask;
};

/// Pairs `<stem>.png` with `<stem>_mask.pgm`, sorted by stem.
inline std::vector<DatasetItem> scan_dataset(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw EmptyDataset("dataset directory not found: " + dir.string());
    std::vector<DatasetItem> items;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const auto& p = entry.path();
        if (!entry.is_regular_file() || p.extension() != ".png") continue;
        const std::string stem = p.stem().string();
        if (stem.ends_with("_mask")) continue;
        const auto mask = dir / (stem + "_mask.pgm");
        if (std::filesystem::is_regular_file(mask)) items.push_back({stem, p, mask});
    }
    if (items.empty()) throw EmptyDataset("no <stem>.png + <stem>_mask.pgm pairs in " + dir.string());
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return items;
}

inline std::uint64_t image_seed(std::uint64_t seed, const std::string& image_id) {
    return derive_seed(seed, hash_string(image_id));
}

inline std::string artifact_stem(Mode mode, const std::string& degradation) {
    std::string s = to_string(mode) + "_" + degradation;
    std::replace(s.begin(), s.end(), ':', '-');
    return s;
}

/// Runs one (image, mode, degradation) cell. The degraded image depends on
/// (seed, image_id, degradation) only, so every mode sees the same input.
inline RunRecord run_image(const ExperimentConfig& cfg, Mode mode, const DegradationSetting& deg,
                           const std::string& image_id, const Image& image, const BinaryMask& gt,
                           SegmenterBackend& backend) {
    require_same_size(image, gt, "run_image");
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t iseed = image_seed(cfg.seed, image_id);
    const Image input = deg.apply(image, cfg.degradation_params, derive_seed(iseed, hash_string("degradation")));

    RunRecord rec;
    rec.image_id = image_id;
    rec.mode = mode;
    rec.degradation = deg.label();

    const BoxPrompt box = gt_bounding_box(gt);
    std::optional<ProbabilityMap> evaluated;
    std::optional<PredictionSet> set;
    switch (mode) {
        case Mode::Everything: {
            auto candidates = backend.predict_everything(input);
            const MaskSelection sel = select_best_mask(candidates, gt, cfg.threshold);
            rec.selected = sel.index;
            rec.m_used = static_cast<int>(candidates.size());
            evaluated = std::move(candidates[sel.index]);
            break;
        }
        case Mode::Box:
            evaluated = backend.predict(input, box);
            rec.m_used = 1;
            break;
        case Mode::Multibox: {
            PromptConfig pc = cfg.prompts;
            pc.seed = derive_seed(iseed, hash_string("prompts"));
            auto boxes = jitter_boxes(box, pc, gt.width(), gt.height());
            std::vector<ProbabilityMap> maps;
            maps.reserve(boxes.size());
            for (const auto& b : boxes) maps.push_back(backend.predict(input, b));
            set.emplace(std::move(maps), std::move(boxes));
            evaluated = fuse_mean(*set);
            rec.m_used = static_cast<int>(set->m());
            break;
        }
    }

    rec.metrics = evaluate(*evaluated, gt, cfg.threshold);
    if (!rec.metrics.finite()) throw InvalidArgument("non-finite metric for " + image_id);

    if (cfg.artifacts) {
        const auto dir = cfg.out_dir / image_id;
        std::filesystem::create_directories(dir);
        const std::string stem = artifact_stem(mode, rec.degradation);
        save_raster_f32(evaluated->raster(), dir / (stem + "_pred.pmap"));
        if (set) {
            for (auto kind : {UncertaintyKind::PredictiveEntropy, UncertaintyKind::ExpectedEntropy,
                              UncertaintyKind::Variance}) {
                const UncertaintyMap u = uncertainty(*set, kind);
                const std::string name = stem + "_u_" + std::string(to_string(kind));
                save_raster_f32(u.values, dir / (name + ".pmap"));
                save_image(render_colormap(u.values), dir / (name + ".png"));
            }
        }
    }
    if (cfg.timing)
        rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

struct AggregateCell {
    std::string degradation;
    Mode mode = Mode::Box;
    std::size_t n = 0;
    MetricReport mean;
};

struct AggregateDelta {
    std::string degradation;
    Mode mode = Mode::Box;
    Mode baseline = Mode::Everything;
    MetricReport diff;  ///< mode minus baseline
};

struct ExperimentResult {
    std::vector<RunRecord> runs;
    std::vector<FailureRecord> failures;
    std::vector<AggregateCell> cells;
    std::vector<AggregateDelta> deltas;
};

/// Arithmetic means per (degradation, mode) cell plus difference rows of
/// each later mode against the first configured one (everything when
/// present, in canonical mode order).
inline void aggregate(const ExperimentConfig& cfg, ExperimentResult& res) {
    std::vector<Mode> modes = cfg.modes;
    std::sort(modes.begin(), modes.end());
    modes.erase(std::unique(modes.begin(), modes.end()), modes.end());
    res.cells.clear();
    res.deltas.clear();
    for (const auto& deg : cfg.degradations) {
        const std::string label = deg.label();
        std::vector<AggregateCell> row;
        for (Mode m : modes) {
            AggregateCell c{label, m, 0, {}};
            for (const auto& r : res.runs) {
                if (r.mode != m || r.degradation != label) continue;
                ++c.n;
                c.mean.dice += r.metrics.dice;
                c.mean.ece += r.metrics.ece;
                c.mean.sm += r.metrics.sm;
                c.mean.wfm += r.metrics.wfm;
            }
            if (c.n > 0) {
                const double n = static_cast<double>(c.n);
                c.mean = {c.mean.dice / n, c.mean.ece / n, c.mean.sm / n, c.mean.wfm / n};
            }
            row.push_back(c);
        }
        for (std::size_t k = 1; k < row.size(); ++k) {
            if (row[k].n == 0 || row[0].n == 0) continue;
            const auto& a = row[k].mean;
            const auto& b = row[0].mean;
            res.deltas.push_back({label, row[k].mode, row[0].mode,
                                  {a.dice - b.dice, a.ece - b.ece, a.sm - b.sm, a.wfm - b.wfm}});
        }
        res.cells.insert(res.cells.end(), row.begin(), row.end());
    }
}

namespace detail {

inline std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

inline std::string signed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%+.6f", v);
    return buf;
}

// Lower ECE is better; a reduction prints as "(0.012345)".
inline std::string ece_delta(double v) {
    return v < 0.0 ? "(" + fixed6(-v) + ")" : signed6(v);
}

inline std::string csv_field(std::string s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

inline std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw IoFailure("cannot write " + p.string());
    return f;
}

} // namespace detail

inline void write_reports(const ExperimentConfig& cfg, const ExperimentResult& res) {
    std::filesystem::create_directories(cfg.out_dir);
    using detail::fixed6;

    auto runs = detail::open_out(cfg.out_dir / "runs.csv");
    runs << "image_id,mode,degradation,dice,ece,sm,wfm,m_used,wall_time_s\n";
    for (const auto& r : res.runs) {
        char wt[32];
        std::snprintf(wt, sizeof wt, "%.3f", r.wall_time_s);
        runs << detail::csv_field(r.image_id) << ',' << to_string(r.mode) << ',' << r.degradation << ','
             << fixed6(r.metrics.dice) << ',' << fixed6(r.metrics.ece) << ',' << fixed6(r.metrics.sm) << ','
             << fixed6(r.metrics.wfm) << ',' << r.m_used << ',' << wt << '\n';
    }

    auto fails = detail::open_out(cfg.out_dir / "failures.csv");
    fails << "image_id,mode,degradation,error\n";
    for (const auto& f : res.failures)
        fails << detail::csv_field(f.image_id) << ',' << to_string(f.mode) << ',' << f.degradation << ','
              << detail::csv_field(f.error) << '\n';

    const std::string backend_label =
        !cfg.backend.label.empty() ? cfg.backend.label
                                   : (cfg.backend.kind == BackendSpec::Kind::Synthetic ? "synthetic" : "external");
    auto agg = detail::open_out(cfg.out_dir / "aggregate.csv");
    agg << "backend,degradation,mode,n,dice,ece,sm,wfm\n";
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    nlohmann::ordered_json deltas = nlohmann::ordered_json::array();
    for (const auto& c : res.cells) {
        agg << detail::csv_field(backend_label) << ',' << c.degradation << ',' << to_string(c.mode) << ','
            << c.n << ',' << fixed6(c.mean.dice) << ',' << fixed6(c.mean.ece) << ',' << fixed6(c.mean.sm)
            << ',' << fixed6(c.mean.wfm) << '\n';
        cells.push_back({{"degradation", c.degradation},
                         {"mode", to_string(c.mode)},
                         {"n", c.n},
                         {"dice", c.mean.dice},
                         {"ece", c.mean.ece},
                         {"sm", c.mean.sm},
                         {"wfm", c.mean.wfm}});
    }
    for (const auto& d : res.deltas) {
        agg << detail::csv_field(backend_label) << ',' << d.degradation << ",delta(" << to_string(d.mode)
            << "-" << to_string(d.baseline) << "),," << detail::signed6(d.diff.dice) << ','
            << detail::ece_delta(d.diff.ece) << ',' << detail::signed6(d.diff.sm) << ','
            << detail::signed6(d.diff.wfm) << '\n';
        deltas.push_back({{"degradation", d.degradation},
                          {"mode", to_string(d.mode)},
                          {"baseline", to_string(d.baseline)},
                          {"dice", d.diff.dice},
                          {"ece", d.diff.ece},
                          {"ece_display", detail::ece_delta(d.diff.ece)},
                          {"sm", d.diff.sm},
                          {"wfm", d.diff.wfm}});
    }
    std::vector<std::string> ids;
    for (const auto& r : res.runs) ids.push_back(r.image_id);
    for (const auto& f : res.failures) ids.push_back(f.image_id);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    nlohmann::ordered_json doc = {{"backend", backend_label},
                                  {"images", ids.size()},
                                  {"runs", res.runs.size()},
                                  {"failures", res.failures.size()},
                                  {"cells", cells},
                                  {"deltas", deltas}};
    auto js = detail::open_out(cfg.out_dir / "aggregate.json");
    js << doc.dump(2) << '\n';
}

/// Makes one backend per worker. The synthetic oracle is rebuilt per image
/// because it carries that image's ground truth.
using BackendFactory = std::function<std::unique_ptr<SegmenterBackend>(const BinaryMask& gt, std::uint64_t seed, int worker)>;

inline BackendFactory default_backend_factory(const ExperimentConfig& cfg) {
    const BackendSpec spec = cfg.backend;
    const auto work = cfg.out_dir / ".backend";
    return [spec, work](const BinaryMask& gt, std::uint64_t seed, int worker) -> std::unique_ptr<SegmenterBackend> {
        if (spec.kind == BackendSpec::Kind::Synthetic) {
            OracleConfig oc;
            oc.gt = gt;
            oc.sigma_blur = spec.sigma_blur;
            oc.kappa = spec.kappa;
            oc.distractors = spec.distractors;
            oc.seed = seed;
            return std::make_unique<SyntheticOracle>(std::move(oc));
        }
        ExternalBackendConfig ec;
        ec.command = spec.command;
        ec.work_dir = work / ("worker_" + std::to_string(worker));
        if (!spec.label.empty()) ec.label = spec.label;
        return std::make_unique<ExternalBackend>(std::move(ec));
    };
}

/// Runs the full grid and writes runs.csv, failures.csv, aggregate.csv and
/// aggregate.json into cfg.out_dir. Failing cells are recorded, not fatal.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, BackendFactory factory = {}) {
    cfg.validate();
    const auto items = scan_dataset(cfg.dataset_dir);
    if (!factory) factory = default_backend_factory(cfg);
    const bool per_image = cfg.backend.kind == BackendSpec::Kind::Synthetic;

    struct Slot {
        std::vector<RunRecord> runs;
        std::vector<FailureRecord> failures;
    };
    std::vector<Slot> slots(items.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&](int wid) {
        std::unique_ptr<SegmenterBackend> shared;
        for (std::size_t i; (i = next.fetch_add(1)) < items.size();) {
            const auto& item = items[i];
            Slot& slot = slots[i];
            auto fail_all = [&](const std::string& msg) {
                for (Mode m : cfg.modes)
                    for (const auto& d : cfg.degradations) slot.failures.push_back({item.id, m, d.label(), msg});
            };
            Image image;
            BinaryMask gt;
            try {
                image = load_image(item.image);
                gt = load_mask(item.mask);
                require_same_size(image, gt, "dataset pair");
            } catch (const std::exception& e) {
                fail_all(e.what());
                continue;
            }
            std::unique_ptr<SegmenterBackend> local;
            SegmenterBackend* backend = nullptr;
            try {
                if (per_image) {
                    local = factory(gt, derive_seed(image_seed(cfg.seed, item.id), hash_string("oracle")), wid);
                    backend = local.get();
                } else {
                    if (!shared) shared = factory(gt, cfg.seed, wid);
                    backend = shared.get();
                }
            } catch (const std::exception& e) {
                fail_all(e.what());
                continue;
            }
            for (const auto& d : cfg.degradations)
                for (Mode m : cfg.modes) {
                    if (!backend) {
                        slot.failures.push_back({item.id, m, d.label(), "backend unavailable"});
                        continue;
                    }
                    try {
                        slot.runs.push_back(run_image(cfg, m, d, item.id, image, gt, *backend));
                    } catch (const BackendUnavailable& e) {
                        slot.failures.push_back({item.id, m, d.label(), e.what()});
                        if (!per_image) {
                            shared.reset();
                            try {
                                shared = factory(gt, cfg.seed, wid);
                                backend = shared.get();
                            } catch (const std::exception&) {
                                backend = nullptr;
                            }
                        }
                    } catch (const std::exception& e) {
                        slot.failures.push_back({item.id, m, d.label(), e.what()});
                    }
                }
        }
    };

    const int jobs = std::min<int>(cfg.jobs, static_cast<int>(items.size()));
    if (jobs <= 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < jobs; ++w) pool.emplace_back(worker, w);
        for (auto& t : pool) t.join();
    }

    ExperimentResult res;
    for (auto& s : slots) {
        std::move(s.runs.begin(), s.runs.end(), std::back_inserter(res.runs));
        std::move(s.failures.begin(), s.failures.end(), std::back_inserter(res.failures));
    }
    aggregate(cfg, res);
    write_reports(cfg, res);
    return res;
}

} // namespace samu
