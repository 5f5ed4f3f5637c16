#include "senla/zeroshot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace senla {

namespace {

void normalize_rows(std::vector<float>& rows, int n, int d) {
    for (int i = 0; i < n; ++i) {
        float* r = rows.data() + static_cast<size_t>(i) * d;
        float ss = 0;
        for (int c = 0; c < d; ++c) ss += r[c] * r[c];
        const float inv = 1.0f / std::sqrt(ss + 1e-12f);
        for (int c = 0; c < d; ++c) r[c] *= inv;
    }
}

std::vector<float> encode_one(const Model& model, const Sample& sample, Modality m) {
    NoGradGuard ng;
    std::vector<const Sample*> batch{&sample};
    return model.encode_samples(batch, m).values();
}

}  // namespace

ClassScorer make_class_scorer(const Model& model, LabelSpace space, const LossConfig& lcfg) {
    ClassScorer sc;
    sc.space = space;
    sc.normalize = lcfg.normalize;
    sc.onehot = model.cfg.mode == "onehot";
    sc.dim = model.cfg.embed_dim;
    if (sc.onehot) {
        // Classifier heads only rank seen classes, whatever space was asked.
        sc.classes = model.registry.seen_count();
        return sc;
    }
    NoGradGuard ng;
    auto text = model.text_embeddings(space);
    sc.classes = text.dim(0);
    sc.text_embs = text.values();
    if (sc.normalize) normalize_rows(sc.text_embs, sc.classes, sc.dim);
    return sc;
}

Prediction rank_embedding(const ClassScorer& scorer, const std::vector<float>& emb) {
    std::vector<float> scores(static_cast<size_t>(scorer.classes));
    if (scorer.onehot) {
        if (static_cast<int>(emb.size()) != scorer.classes)
            throw DimensionError("rank_embedding: logits width mismatch");
        scores = emb;
    } else {
        if (static_cast<int>(emb.size()) != scorer.dim)
            throw DimensionError("rank_embedding: embedding width mismatch");
        std::vector<float> e = emb;
        if (scorer.normalize) normalize_rows(e, 1, scorer.dim);
        for (int k = 0; k < scorer.classes; ++k) {
            const float* t = scorer.text_embs.data() + static_cast<size_t>(k) * scorer.dim;
            float dot = 0;
            for (int c = 0; c < scorer.dim; ++c) dot += e[static_cast<size_t>(c)] * t[c];
            scores[static_cast<size_t>(k)] = dot;
        }
    }
    Prediction p;
    p.ranking.reserve(scores.size());
    for (int k = 0; k < scorer.classes; ++k) p.ranking.emplace_back(k, scores[static_cast<size_t>(k)]);
    std::stable_sort(p.ranking.begin(), p.ranking.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    p.class_id = p.ranking.front().first;
    return p;
}

Prediction predict(const Model& model, const ClassScorer& scorer, const Sample& sample, Modality m) {
    if (scorer.onehot) {
        NoGradGuard ng;
        std::vector<const Sample*> batch{&sample};
        auto emb = model.encode_samples(batch, m);
        return rank_embedding(scorer, model.head_logits(emb, m).values());
    }
    return rank_embedding(scorer, encode_one(model, sample, m));
}

EvalReport evaluate(const Model& model, const Dataset& data, const std::vector<int>& indices,
                    Modality m, LabelSpace space, const LossConfig& lcfg,
                    const std::string& split_tag) {
    if (indices.empty()) throw ConfigError("evaluate: empty split");
    const auto& reg = model.registry;
    if (reg.hash() != data.registry.hash())
        throw CompatibilityError("evaluate: model and dataset class registries differ");
    const int total = reg.total();
    const int ks = reg.seen_count();

    ClassScorer scorer = make_class_scorer(model, space, lcfg);

    EvalReport rep;
    rep.modality = modality_name(m);
    rep.split = split_tag;
    rep.label_space = space == LabelSpace::Full ? "full" : "seen";
    rep.confusion.assign(static_cast<size_t>(total), std::vector<int>(static_cast<size_t>(total), 0));
    rep.per_class_counts.assign(static_cast<size_t>(total), 0);
    std::vector<int> correct(static_cast<size_t>(total), 0);

    // Batched inference; the report is an order-independent fold.
    constexpr int kBatch = 64;
    NoGradGuard ng;
    const auto cache = SampleCacheT<float>::build(data.samples, indices, model.cfg);
    for (size_t start = 0; start < indices.size(); start += kBatch) {
        const size_t end = std::min(indices.size(), start + kBatch);
        std::vector<int> batch(indices.begin() + static_cast<long>(start),
                               indices.begin() + static_cast<long>(end));
        std::vector<float> embs;
        if (scorer.onehot) {
            auto e = model.encode_cached(cache, batch, m);
            embs = model.head_logits(e, m).values();
        } else {
            embs = model.encode_cached(cache, batch, m).values();
            if (scorer.normalize) normalize_rows(embs, static_cast<int>(batch.size()), scorer.dim);
        }
        for (size_t b = 0; b < batch.size(); ++b) {
            int best = 0;
            float best_score = -std::numeric_limits<float>::infinity();
            if (scorer.onehot) {
                const float* row = embs.data() + b * static_cast<size_t>(scorer.classes);
                for (int k = 0; k < scorer.classes; ++k)
                    if (row[k] > best_score) {
                        best_score = row[k];
                        best = k;
                    }
            } else {
                const float* e = embs.data() + b * static_cast<size_t>(scorer.dim);
                for (int k = 0; k < scorer.classes; ++k) {
                    const float* t = scorer.text_embs.data() + static_cast<size_t>(k) * scorer.dim;
                    float dot = 0;
                    for (int c = 0; c < scorer.dim; ++c) dot += e[c] * t[c];
                    if (dot > best_score) {
                        best_score = dot;
                        best = k;
                    }
                }
            }
            const int truth = data.samples[static_cast<size_t>(batch[b])].class_id;
            rep.per_class_counts[static_cast<size_t>(truth)]++;
            rep.confusion[static_cast<size_t>(truth)][static_cast<size_t>(best)]++;
            if (best == truth) correct[static_cast<size_t>(truth)]++;
        }
    }

    rep.seen_per_class.assign(static_cast<size_t>(ks), 0.0);
    rep.unseen_per_class.assign(static_cast<size_t>(total - ks), 0.0);
    double seen_sum = 0;
    int seen_classes = 0;
    for (int c = 0; c < ks; ++c) {
        if (rep.per_class_counts[static_cast<size_t>(c)] == 0) continue;
        rep.seen_per_class[static_cast<size_t>(c)] =
            static_cast<double>(correct[static_cast<size_t>(c)]) / rep.per_class_counts[static_cast<size_t>(c)];
        seen_sum += rep.seen_per_class[static_cast<size_t>(c)];
        ++seen_classes;
    }
    rep.seen_avg = seen_classes ? seen_sum / seen_classes : 0.0;
    double unseen_sum = 0;
    int unseen_classes = 0;
    for (int c = ks; c < total; ++c) {
        if (rep.per_class_counts[static_cast<size_t>(c)] == 0) continue;
        rep.unseen_per_class[static_cast<size_t>(c - ks)] =
            static_cast<double>(correct[static_cast<size_t>(c)]) / rep.per_class_counts[static_cast<size_t>(c)];
        unseen_sum += rep.unseen_per_class[static_cast<size_t>(c - ks)];
        ++unseen_classes;
    }
    rep.unseen_avg = unseen_classes ? unseen_sum / unseen_classes : 0.0;
    return rep;
}

std::string EvalReport::render_table(const Registry& registry) const {
    std::ostringstream os;
    char buf[64];
    os << "modality: " << modality << "  split: " << split << "  labels: " << label_space << "\n";
    std::snprintf(buf, sizeof(buf), "seen set accuracy: %.4f\n", seen_avg);
    os << buf;
    const int ks = registry.seen_count();
    if (label_space == "full" && !unseen_per_class.empty()) {
        os << "unseen set:\n";
        for (size_t z = 0; z < unseen_per_class.size(); ++z) {
            std::snprintf(buf, sizeof(buf), "  Z%02zu %-24s %.4f\n", z + 1,
                          registry.entry(ks + static_cast<int>(z)).name.c_str(), unseen_per_class[z]);
            os << buf;
        }
        std::snprintf(buf, sizeof(buf), "  Avg %29s%.4f\n", "", unseen_avg);
        os << buf;
    }
    os << "per-seen-class accuracy:\n";
    for (int c = 0; c < ks; ++c) {
        std::snprintf(buf, sizeof(buf), "  %-28s %.4f (%d samples)\n", registry.entry(c).name.c_str(),
                      seen_per_class[static_cast<size_t>(c)], per_class_counts[static_cast<size_t>(c)]);
        os << buf;
    }
    return os.str();
}

std::string EvalReport::to_json(const Registry& registry) const {
    nlohmann::json j;
    j["modality"] = modality;
    j["split"] = split;
    j["label_space"] = label_space;
    j["seen_avg"] = seen_avg;
    j["unseen_avg"] = unseen_avg;
    j["seen_per_class"] = seen_per_class;
    j["per_class_counts"] = per_class_counts;
    j["confusion"] = confusion;
    const int ks = registry.seen_count();
    nlohmann::json unseen = nlohmann::json::object();
    for (size_t z = 0; z < unseen_per_class.size(); ++z) {
        char key[8];
        std::snprintf(key, sizeof(key), "Z%02zu", z + 1);
        unseen[key] = {{"name", registry.entry(ks + static_cast<int>(z)).name},
                       {"top1", unseen_per_class[z]}};
    }
    j["unseen"] = unseen;
    return j.dump(2);
}

void dump_embeddings(const Model& model, const Dataset& data, const std::vector<int>& indices,
                     const LossConfig& lcfg, const std::string& path) {
    NoGradGuard ng;
    const int d = model.cfg.embed_dim;
    std::vector<std::string> tags;
    std::vector<int> class_ids;
    std::vector<float> rows;

    const auto cache = SampleCacheT<float>::build(data.samples, indices, model.cfg);
    for (Modality m : model.modalities()) {
        constexpr int kBatch = 64;
        for (size_t start = 0; start < indices.size(); start += kBatch) {
            const size_t end = std::min(indices.size(), start + kBatch);
            std::vector<int> batch(indices.begin() + static_cast<long>(start),
                                   indices.begin() + static_cast<long>(end));
            auto emb = model.encode_cached(cache, batch, m);
            rows.insert(rows.end(), emb.values().begin(), emb.values().end());
            for (int i : batch) {
                tags.push_back(modality_name(m));
                class_ids.push_back(data.samples[static_cast<size_t>(i)].class_id);
            }
        }
    }
    if (model.cfg.mode == "contrastive") {
        auto text = model.text_embeddings(LabelSpace::Full);
        rows.insert(rows.end(), text.values().begin(), text.values().end());
        for (int c = 0; c < text.dim(0); ++c) {
            tags.push_back("text");
            class_ids.push_back(c);
        }
    }
    (void)lcfg;

    const int n = static_cast<int>(tags.size());

    // Deterministic 2-d projection: top two principal directions via seeded
    // power iteration on the centered rows.
    std::vector<double> mean(static_cast<size_t>(d), 0.0);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < d; ++c) mean[static_cast<size_t>(c)] += rows[static_cast<size_t>(i) * d + c];
    for (auto& v : mean) v /= std::max(1, n);
    std::vector<double> centered(static_cast<size_t>(n) * d);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < d; ++c)
            centered[static_cast<size_t>(i) * d + c] =
                rows[static_cast<size_t>(i) * d + c] - mean[static_cast<size_t>(c)];

    auto power_direction = [&](uint64_t stream, const std::vector<double>* deflate) {
        Rng rng = Rng::derive(0x50434131ull, stream);
        std::vector<double> v(static_cast<size_t>(d));
        for (auto& x : v) x = rng.normal();
        std::vector<double> xv(static_cast<size_t>(n)), next(static_cast<size_t>(d));
        for (int it = 0; it < 64; ++it) {
            if (deflate) {
                double dp = 0;
                for (int c = 0; c < d; ++c) dp += v[static_cast<size_t>(c)] * (*deflate)[static_cast<size_t>(c)];
                for (int c = 0; c < d; ++c) v[static_cast<size_t>(c)] -= dp * (*deflate)[static_cast<size_t>(c)];
            }
            for (int i = 0; i < n; ++i) {
                double s = 0;
                for (int c = 0; c < d; ++c) s += centered[static_cast<size_t>(i) * d + c] * v[static_cast<size_t>(c)];
                xv[static_cast<size_t>(i)] = s;
            }
            std::fill(next.begin(), next.end(), 0.0);
            for (int i = 0; i < n; ++i)
                for (int c = 0; c < d; ++c)
                    next[static_cast<size_t>(c)] += centered[static_cast<size_t>(i) * d + c] * xv[static_cast<size_t>(i)];
            double nn = 0;
            for (double x : next) nn += x * x;
            const double inv = 1.0 / std::sqrt(nn + 1e-30);
            for (int c = 0; c < d; ++c) v[static_cast<size_t>(c)] = next[static_cast<size_t>(c)] * inv;
        }
        return v;
    };
    const std::vector<double> p1 = power_direction(1, nullptr);
    const std::vector<double> p2 = power_direction(2, &p1);

    std::ofstream os(path);
    if (!os) throw FileError("cannot open '" + path + "' for writing");
    os << "modality\tclass_id\tproj_x\tproj_y";
    for (int c = 0; c < d; ++c) os << "\te" << c;
    os << "\n";
    char buf[32];
    for (int i = 0; i < n; ++i) {
        double px = 0, py = 0;
        for (int c = 0; c < d; ++c) {
            px += centered[static_cast<size_t>(i) * d + c] * p1[static_cast<size_t>(c)];
            py += centered[static_cast<size_t>(i) * d + c] * p2[static_cast<size_t>(c)];
        }
        os << tags[static_cast<size_t>(i)] << "\t" << class_ids[static_cast<size_t>(i)];
        std::snprintf(buf, sizeof(buf), "\t%.6e\t%.6e", px, py);
        os << buf;
        for (int c = 0; c < d; ++c) {
            std::snprintf(buf, sizeof(buf), "\t%.6e", static_cast<double>(rows[static_cast<size_t>(i) * d + c]));
            os << buf;
        }
        os << "\n";
    }
    if (!os) throw FileError("write failed for '" + path + "'");
}

}  // namespace senla
