#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dml/io.hpp"
#include "dml/mathutil.hpp"
#include "dml/rng.hpp"

namespace dml {

enum class Label { Truthful, Deceptive };

inline const char* label_name(Label l) { return l == Label::Truthful ? "TRUTHFUL" : "DECEPTIVE"; }

inline Label parse_label(const std::string& s) {
    if (s == "TRUTHFUL") return Label::Truthful;
    if (s == "DECEPTIVE") return Label::Deceptive;
    throw std::runtime_error("unknown label: " + s);
}

enum class Modality { Affect, Visual, Vocal, Verbal };

inline constexpr int kAffectChannels = 2;
inline constexpr int kVisualChannels = 31;
inline constexpr int kVocalChannels = 65;
inline constexpr int kVerbalDims = 93;

inline const char* modality_name(Modality m) {
    switch (m) {
        case Modality::Affect: return "affect";
        case Modality::Visual: return "visual";
        case Modality::Vocal: return "vocal";
        case Modality::Verbal: return "verbal";
    }
    return "?";
}

inline Modality parse_modality(const std::string& s) {
    if (s == "affect") return Modality::Affect;
    if (s == "visual") return Modality::Visual;
    if (s == "vocal") return Modality::Vocal;
    if (s == "verbal") return Modality::Verbal;
    throw std::runtime_error("unknown modality: " + s);
}

// One behavioral time series. Affect channels ("valence", "arousal") are
// constrained to [-1, 1]; everything else is unitless.
struct FrameStream {
    std::string channel_id;
    std::vector<double> values;
    double frames_per_second = 30.0;  // metadata only
};

struct VideoRecord {
    std::string video_id;
    std::string speaker_id;
    Label label = Label::Truthful;
    std::vector<FrameStream> affect;  // exactly 2: valence, arousal
    std::vector<FrameStream> visual;  // exactly 31
    std::vector<FrameStream> vocal;   // exactly 65
    std::vector<double> verbal;       // exactly 93, each in [0, 100]

    const std::vector<FrameStream>& streams(Modality m) const {
        switch (m) {
            case Modality::Affect: return affect;
            case Modality::Visual: return visual;
            case Modality::Vocal: return vocal;
            default: throw std::runtime_error("verbal modality has no streams");
        }
    }
};

struct CorpusCounts {
    int n_truthful = 0;
    int n_deceptive = 0;
    int n_speakers = 0;
};

struct CorpusManifest {
    std::vector<VideoRecord> records;

    CorpusCounts counts() const {
        CorpusCounts c;
        std::set<std::string> speakers;
        for (const auto& r : records) {
            (r.label == Label::Truthful ? c.n_truthful : c.n_deceptive)++;
            speakers.insert(r.speaker_id);
        }
        c.n_speakers = static_cast<int>(speakers.size());
        return c;
    }
};

// ---- validation ----

inline void check_stream(const VideoRecord& r, const FrameStream& s,
                         std::vector<std::string>& diags) {
    if (s.values.size() < 2) {
        diags.push_back(r.video_id + "/" + s.channel_id + ": stream length " +
                        std::to_string(s.values.size()) + " < 2");
    }
    bool affect_channel = s.channel_id == "valence" || s.channel_id == "arousal";
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        double v = s.values[i];
        if (!std::isfinite(v)) {
            diags.push_back(r.video_id + "/" + s.channel_id + ": non-finite value at frame " +
                            std::to_string(i));
            break;
        }
        if (affect_channel && (v < -1.0 || v > 1.0)) {
            diags.push_back(r.video_id + "/" + s.channel_id + ": value " + fmt_double(v) +
                            " out of [-1,1] at frame " + std::to_string(i));
            break;
        }
    }
}

// Diagnostics, not failures: empty result means every invariant holds.
inline std::vector<std::string> validate(const CorpusManifest& manifest) {
    std::vector<std::string> diags;
    std::set<std::string> seen_ids;
    for (const auto& r : manifest.records) {
        if (!seen_ids.insert(r.video_id).second)
            diags.push_back("duplicate video_id: " + r.video_id);
        if (r.speaker_id.empty()) diags.push_back(r.video_id + ": empty speaker_id");

        struct Block {
            Modality m;
            const std::vector<FrameStream>* streams;
            int expected;
        };
        const Block blocks[] = {{Modality::Affect, &r.affect, kAffectChannels},
                                {Modality::Visual, &r.visual, kVisualChannels},
                                {Modality::Vocal, &r.vocal, kVocalChannels}};
        for (const auto& b : blocks) {
            if (static_cast<int>(b.streams->size()) != b.expected) {
                diags.push_back(r.video_id + ": expected " + std::to_string(b.expected) + " " +
                                modality_name(b.m) + " channels, got " +
                                std::to_string(b.streams->size()));
                continue;
            }
            std::size_t len = (*b.streams)[0].values.size();
            for (const auto& s : *b.streams) {
                check_stream(r, s, diags);
                if (s.values.size() != len)
                    diags.push_back(r.video_id + ": unequal stream lengths within " +
                                    std::string(modality_name(b.m)) + " modality");
            }
        }
        if (static_cast<int>(r.verbal.size()) != kVerbalDims) {
            diags.push_back(r.video_id + ": expected " + std::to_string(kVerbalDims) +
                            " verbal values, got " + std::to_string(r.verbal.size()));
        } else {
            for (std::size_t i = 0; i < r.verbal.size(); ++i) {
                double v = r.verbal[i];
                if (!std::isfinite(v) || v < 0.0 || v > 100.0) {
                    diags.push_back(r.video_id + ": verbal component " + std::to_string(i) +
                                    " out of [0,100]");
                    break;
                }
            }
        }
    }
    return diags;
}

// ---- manifest serialization ----
// One JSON document plus one CSV per (video, frame modality); verbal inline.

inline std::string stream_csv(const std::vector<FrameStream>& streams) {
    std::ostringstream out;
    for (std::size_t c = 0; c < streams.size(); ++c)
        out << (c ? "," : "") << streams[c].channel_id;
    out << "\n";
    std::size_t len = streams.empty() ? 0 : streams[0].values.size();
    for (std::size_t t = 0; t < len; ++t) {
        for (std::size_t c = 0; c < streams.size(); ++c)
            out << (c ? "," : "") << fmt_double(streams[c].values[t]);
        out << "\n";
    }
    return out.str();
}

inline std::vector<FrameStream> parse_stream_csv(const std::string& text, double fps) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty stream CSV");
    std::vector<FrameStream> streams;
    for (const auto& id : split_csv_line(line)) streams.push_back({id, {}, fps});
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != streams.size()) throw std::runtime_error("ragged stream CSV row");
        for (std::size_t c = 0; c < cells.size(); ++c)
            streams[c].values.push_back(std::stod(cells[c]));
    }
    return streams;
}

// Manifest JSON is emitted by hand so repeated runs are byte-identical.
inline void save_manifest(const CorpusManifest& manifest, const std::filesystem::path& dir,
                          const std::string& json_name = "manifest.json") {
    std::filesystem::create_directories(dir);
    std::ostringstream out;
    out << "{\n  \"records\": [\n";
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
        const auto& r = manifest.records[i];
        const std::pair<const char*, const std::vector<FrameStream>*> mods[] = {
            {"affect", &r.affect}, {"visual", &r.visual}, {"vocal", &r.vocal}};
        out << "    {\"video_id\": \"" << r.video_id << "\", \"speaker_id\": \"" << r.speaker_id
            << "\", \"label\": \"" << label_name(r.label) << "\"";
        for (const auto& [name, streams] : mods) {
            std::string rel = r.video_id + "_" + name + ".csv";
            write_text_file(dir / rel, stream_csv(*streams));
            double fps = streams->empty() ? 30.0 : (*streams)[0].frames_per_second;
            out << ", \"" << name << "_csv\": \"" << rel << "\", \"" << name
                << "_fps\": " << fmt_double(fps);
        }
        out << ", \"verbal\": [";
        for (std::size_t j = 0; j < r.verbal.size(); ++j)
            out << (j ? "," : "") << fmt_double(r.verbal[j]);
        out << "]}" << (i + 1 < manifest.records.size() ? "," : "") << "\n";
    }
    out << "  ]\n}\n";
    write_text_file(dir / json_name, out.str());
}

inline CorpusManifest load_manifest(const std::filesystem::path& json_path) {
    if (!std::filesystem::exists(json_path))
        throw std::runtime_error("manifest not found: " + json_path.string());
    auto doc = nlohmann::json::parse(read_text_file(json_path));
    auto base = json_path.parent_path();
    CorpusManifest manifest;
    std::set<std::string> seen;
    for (const auto& jr : doc.at("records")) {
        VideoRecord r;
        r.video_id = jr.at("video_id").get<std::string>();
        r.speaker_id = jr.at("speaker_id").get<std::string>();
        r.label = parse_label(jr.at("label").get<std::string>());
        if (!seen.insert(r.video_id).second)
            throw std::runtime_error("duplicate video_id: " + r.video_id);
        const std::pair<const char*, std::vector<FrameStream>*> mods[] = {
            {"affect", &r.affect}, {"visual", &r.visual}, {"vocal", &r.vocal}};
        for (const auto& [name, streams] : mods) {
            auto rel = jr.at(std::string(name) + "_csv").get<std::string>();
            double fps = jr.at(std::string(name) + "_fps").get<double>();
            auto path = base / rel;
            if (!std::filesystem::exists(path))
                throw std::runtime_error(r.video_id + ": missing stream file " + path.string());
            *streams = parse_stream_csv(read_text_file(path), fps);
        }
        r.verbal = jr.at("verbal").get<std::vector<double>>();
        manifest.records.push_back(std::move(r));
    }
    auto diags = validate(manifest);
    if (!diags.empty()) throw std::runtime_error("invalid manifest: " + diags.front());
    return manifest;
}

// ---- synthetic corpus ----

struct ClassAffectTargets {
    double mean_valence;
    double mean_arousal;
    double within_std_valence;
    double within_std_arousal;
};

struct SyntheticSpec {
    int n_videos = 108;
    int n_truthful = 53;
    int n_deceptive = 55;
    int n_speakers = 47;
    ClassAffectTargets truthful{0.06, 0.13, 0.11, 0.09};
    ClassAffectTargets deceptive{-0.07, 0.21, 0.14, 0.12};
    // Between-video spread of per-video mean valence / arousal.
    double between_std_valence = 0.12;
    double between_std_arousal = 0.08;
    double ar_coefficient = 0.9;
    int stream_length_frames = 840;
    double frames_per_second = 30.0;
    double snr_affect = 1.0;
    double snr_visual = 0.5;
    double snr_vocal = 0.4;
    double snr_verbal = 0.1;
    std::uint64_t seed = 0;

    void check() const {
        if (n_truthful + n_deceptive != n_videos)
            throw std::invalid_argument("n_truthful + n_deceptive must equal n_videos");
        if (n_speakers > n_videos || n_speakers < 1)
            throw std::invalid_argument("need 1 <= n_speakers <= n_videos");
        // single-class speakers holding 1-4 videos each must be able to cover both classes
        int min_speakers = (n_truthful + 3) / 4 + (n_deceptive + 3) / 4;
        if (n_speakers < min_speakers)
            throw std::invalid_argument("too few speakers for 1-4 single-class videos each");
        if (between_std_valence <= 0 || between_std_arousal <= 0 ||
            truthful.within_std_valence <= 0 || truthful.within_std_arousal <= 0 ||
            deceptive.within_std_valence <= 0 || deceptive.within_std_arousal <= 0)
            throw std::invalid_argument("all stds must be positive");
        if (ar_coefficient < 0.0 || ar_coefficient >= 1.0)
            throw std::invalid_argument("ar_coefficient must be in [0,1)");
        if (n_videos > 0 && (n_truthful < 0 || n_deceptive < 0))
            throw std::invalid_argument("negative class count");
    }
};

namespace detail {

// Signal-shape constants for the noise modalities, sized so that on defaults
// the unimodal ROC-AUC ordering is affect > visual > vocal > verbal.
inline constexpr double kChannelOffsetStd = 0.25;  // per-video channel offset
inline constexpr double kChannelNoiseStd = 0.30;   // AR(1) stationary std
inline constexpr double kWithinStdSpread = 0.06;  // between-video spread of within-video std
inline constexpr double kVisualShift = 0.12;
inline constexpr double kVocalShift = 0.12;
inline constexpr double kVerbalTilt = 3.2;
inline constexpr int kVerbalInformative = 12;
inline constexpr double kVerbalConcentration = 60.0;

// Speaker video counts for one class: each speaker gets 1-4 videos.
inline std::vector<int> speaker_video_counts(int n_videos, int n_speakers) {
    if (n_speakers < 1 || n_videos < n_speakers || n_videos > 4 * n_speakers)
        throw std::invalid_argument("cannot place videos on speakers with 1-4 each");
    std::vector<int> counts(n_speakers, n_videos / n_speakers);
    int rem = n_videos % n_speakers;
    for (int i = 0; i < rem; ++i) counts[i]++;
    return counts;
}

inline std::vector<double> ar1_series(Rng& rng, int n, double mean, double stationary_std,
                                      double rho) {
    std::vector<double> x(n);
    double innov = stationary_std * std::sqrt(1.0 - rho * rho);
    x[0] = mean + normal(rng, 0.0, stationary_std);
    for (int t = 1; t < n; ++t)
        x[t] = mean + rho * (x[t - 1] - mean) + normal(rng, 0.0, innov);
    return x;
}

inline void clip_inplace(std::vector<double>& v, double lo, double hi) {
    for (double& x : v) x = std::clamp(x, lo, hi);
}

}  // namespace detail

// Deterministic synthetic corpus calibrated to the per-class affect targets.
inline CorpusManifest generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    spec.check();
    const double rho = spec.ar_coefficient;
    const int n = spec.stream_length_frames;

    // Split speakers across classes proportionally to class video counts.
    int s_truthful = 0;
    if (spec.n_truthful > 0 && spec.n_deceptive > 0) {
        s_truthful = static_cast<int>(std::lround(
            static_cast<double>(spec.n_speakers) * spec.n_truthful / spec.n_videos));
        int lo = (spec.n_truthful + 3) / 4;
        int hi_other = (spec.n_deceptive + 3) / 4;
        s_truthful = std::clamp(s_truthful, lo, spec.n_speakers - hi_other);
        s_truthful = std::min(s_truthful, spec.n_truthful);
        s_truthful = std::max(s_truthful, spec.n_speakers - spec.n_deceptive);
    } else if (spec.n_truthful > 0) {
        s_truthful = spec.n_speakers;
    }
    int s_deceptive = spec.n_speakers - s_truthful;

    struct Slot {
        Label label;
        int speaker;  // global speaker index
    };
    std::vector<Slot> slots;
    if (s_truthful > 0)
        for (int sp = 0; const int c : detail::speaker_video_counts(spec.n_truthful, s_truthful)) {
            for (int v = 0; v < c; ++v) slots.push_back({Label::Truthful, sp});
            ++sp;
        }
    if (s_deceptive > 0)
        for (int sp = s_truthful;
             const int c : detail::speaker_video_counts(spec.n_deceptive, s_deceptive)) {
            for (int v = 0; v < c; ++v) slots.push_back({Label::Deceptive, sp});
            ++sp;
        }

    Rng order_rng = make_rng(seed, 0xD15C0);
    shuffle(slots, order_rng);

    // snr interpolation: pooled targets at snr 0, full class separation at snr 1.
    double w_t = spec.n_videos > 0 ? static_cast<double>(spec.n_truthful) / spec.n_videos : 0.5;
    auto blend = [&](double class_val, double other_val, double other_weight, double snr) {
        double pooled = (1.0 - other_weight) * class_val + other_weight * other_val;
        return pooled + snr * (class_val - pooled);
    };

    CorpusManifest manifest;
    for (std::size_t vi = 0; vi < slots.size(); ++vi) {
        const auto& slot = slots[vi];
        Rng rng = make_rng(seed, 1000 + vi);
        VideoRecord r;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "vid_%03zu", vi + 1);
        r.video_id = buf;
        std::snprintf(buf, sizeof(buf), "spk_%03d", slot.speaker + 1);
        r.speaker_id = buf;
        r.label = slot.label;
        double y = slot.label == Label::Deceptive ? 1.0 : -1.0;
        const ClassAffectTargets& self =
            slot.label == Label::Deceptive ? spec.deceptive : spec.truthful;
        const ClassAffectTargets& other =
            slot.label == Label::Deceptive ? spec.truthful : spec.deceptive;
        double ow = slot.label == Label::Deceptive ? w_t : 1.0 - w_t;

        // affect: mean-reverting AR(1) around a per-video class-conditional mean
        const struct {
            const char* id;
            double mu, sigma_between, sigma_within;
        } affect_specs[] = {
            {"valence", blend(self.mean_valence, other.mean_valence, ow, spec.snr_affect),
             spec.between_std_valence,
             blend(self.within_std_valence, other.within_std_valence, ow, spec.snr_affect)},
            {"arousal", blend(self.mean_arousal, other.mean_arousal, ow, spec.snr_affect),
             spec.between_std_arousal,
             blend(self.within_std_arousal, other.within_std_arousal, ow, spec.snr_affect)},
        };
        for (const auto& a : affect_specs) {
            double video_mean = std::clamp(normal(rng, a.mu, a.sigma_between), -1.0, 1.0);
            double video_std =
                std::max(0.02, normal(rng, a.sigma_within, detail::kWithinStdSpread));
            FrameStream s{a.id, detail::ar1_series(rng, n, video_mean, video_std, rho),
                          spec.frames_per_second};
            detail::clip_inplace(s.values, -1.0, 1.0);
            r.affect.push_back(std::move(s));
        }

        // visual / vocal: AR(1) noise + per-video offset + snr-scaled class shift
        auto noise_block = [&](const char* prefix, int n_channels, double snr, double shift) {
            std::vector<FrameStream> block;
            for (int c = 0; c < n_channels; ++c) {
                double sign = (c % 2 == 0) ? 1.0 : -1.0;
                double offset = normal(rng, 0.0, detail::kChannelOffsetStd);
                double mean = offset + y * snr * sign * shift;
                char cid[32];
                std::snprintf(cid, sizeof(cid), "%s_%02d", prefix, c + 1);
                block.push_back({cid,
                                 detail::ar1_series(rng, n, mean, detail::kChannelNoiseStd, rho),
                                 spec.frames_per_second});
            }
            return block;
        };
        r.visual = noise_block("visual", kVisualChannels, spec.snr_visual, detail::kVisualShift);
        r.vocal = noise_block("vocal", kVocalChannels, spec.snr_vocal, detail::kVocalShift);

        // verbal: Dirichlet-like percentage vector with snr-scaled mean tilt
        std::vector<double> shape(kVerbalDims);
        double total_w = 0.0;
        for (int j = 0; j < kVerbalDims; ++j) {
            double w = 1.0 + 0.5 * (j % 7);
            if (j < detail::kVerbalInformative) {
                double tilt = (j % 2 == 0 ? 1.0 : -1.0) * detail::kVerbalTilt;
                w *= std::max(0.05, 1.0 + y * spec.snr_verbal * tilt);
            }
            shape[j] = w;
            total_w += w;
        }
        r.verbal.resize(kVerbalDims);
        double sum = 0.0;
        for (int j = 0; j < kVerbalDims; ++j) {
            std::gamma_distribution<double> g(detail::kVerbalConcentration * shape[j] / total_w,
                                              1.0);
            r.verbal[j] = g(rng);
            sum += r.verbal[j];
        }
        for (double& v : r.verbal) v = 100.0 * v / sum;

        manifest.records.push_back(std::move(r));
    }
    return manifest;
}

inline CorpusManifest generate_synthetic(const SyntheticSpec& spec) {
    return generate_synthetic(spec, spec.seed);
}

}  // namespace dml
