#pragma once

#include <algorithm>
#include <cstring>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "senla/data_types.hpp"
#include "senla/nn.hpp"
#include "senla/text.hpp"

namespace senla {

// Architecture description. The 768-wide output is the shared-space contract;
// everything else is sized to train in minutes on one CPU.
struct ModelConfig {
    int width = 64;
    int heads = 4;
    int video_blocks = 2;
    int point_blocks = 2;
    int text_blocks = 2;
    int mlp_ratio = 2;
    int embed_dim = 768;
    int frames = 8;
    int video_hw = 16;
    int patch_size = 4;
    int knn_k = 8;
    int prompt_count = 16;  // n; the bank holds 2n vectors
    int max_text_len = 32;
    int lidar_feats = 3;
    int radar_feats = 5;
    std::string mode = "contrastive";  // "contrastive" | "onehot"
    std::string modality = "all";      // "all" or a single modality (separate training)
    bool use_description = true;
    bool soft_prompt = true;
    std::string zero_shot_text = "name_desc";  // "name_desc" | "name_name"

    int patches_per_frame() const {
        const int g = video_hw / patch_size;
        return g * g;
    }
    int patch_dim() const { return 3 * patch_size * patch_size; }
    int hidden() const { return width * mlp_ratio; }
    int effective_prompts() const { return soft_prompt ? prompt_count : 0; }

    bool has_modality(Modality m) const {
        return modality == "all" || modality == modality_name(m);
    }

    void validate() const {
        if (video_hw % patch_size != 0) throw ConfigError("video extent must be divisible by patch size");
        if (width % heads != 0) throw ConfigError("width must be divisible by heads");
        if (mode != "contrastive" && mode != "onehot")
            throw ConfigError("mode must be contrastive or onehot, got '" + mode + "'");
        if (modality != "all") modality_from_name(modality);
        if (zero_shot_text != "name_desc" && zero_shot_text != "name_name")
            throw ConfigError("zero_shot_text must be name_desc or name_name");
        if (prompt_count < 0 || max_text_len < 1) throw ConfigError("bad text sizing");
    }
};

// ---------------------------------------------------------------------------
// Batch assembly
// ---------------------------------------------------------------------------

// Stacked per-frame 4x4 patches, rows laid out [sample][frame][patch].
template <typename T>
TensorT<T> video_patches(const std::vector<const VideoClip*>& clips, const ModelConfig& cfg) {
    const int P = cfg.patches_per_frame();
    const int g = cfg.video_hw / cfg.patch_size;
    const int pd = cfg.patch_dim();
    const int B = static_cast<int>(clips.size());
    std::vector<T> rows(static_cast<size_t>(B) * cfg.frames * P * pd);
    for (int b = 0; b < B; ++b) {
        const VideoClip& c = *clips[static_cast<size_t>(b)];
        if (c.height != cfg.video_hw || c.width != cfg.video_hw || c.frames != cfg.frames)
            throw DimensionError("video clip " + shape_str(c.logical_shape()) + " does not match configured " +
                                 shape_str({3, cfg.video_hw, cfg.video_hw, cfg.frames}));
        for (int f = 0; f < cfg.frames; ++f)
            for (int p = 0; p < P; ++p) {
                const int py = (p / g) * cfg.patch_size;
                const int px = (p % g) * cfg.patch_size;
                T* dst = rows.data() +
                         ((static_cast<size_t>(b) * cfg.frames + f) * P + p) * pd;
                int o = 0;
                for (int ch = 0; ch < 3; ++ch)
                    for (int y = 0; y < cfg.patch_size; ++y)
                        for (int x = 0; x < cfg.patch_size; ++x)
                            dst[o++] = static_cast<T>(c.at(f, ch, py + y, px + x));
            }
    }
    return TensorT<T>::from_data({B * cfg.frames * P, pd}, std::move(rows));
}

// Ragged point batch with per-frame k-nearest-neighbor lists over xyz.
template <typename T>
struct PointBatchT {
    TensorT<T> feats;                 // rows x feat_width
    std::vector<int> frame_offsets;   // B*S + 1
    std::vector<int> sample_offsets;  // B + 1 (frame-token rows)
    std::vector<int> nbr;
    std::vector<int> nbr_offsets;     // rows + 1
    int batch = 0;
};

template <typename T>
PointBatchT<T> build_point_batch(const std::vector<const PointSequence*>& seqs,
                                 const ModelConfig& cfg, int feat_width) {
    const int B = static_cast<int>(seqs.size());
    PointBatchT<T> pb;
    pb.batch = B;
    pb.frame_offsets.push_back(0);
    int rows = 0;
    for (int b = 0; b < B; ++b) {
        const PointSequence& s = *seqs[static_cast<size_t>(b)];
        if (s.feat_width != feat_width)
            throw DimensionError("point sequence has " + std::to_string(s.feat_width) +
                                 " features, encoder expects " + std::to_string(feat_width));
        if (static_cast<int>(s.frames.size()) != cfg.frames)
            throw DimensionError("point sequence has " + std::to_string(s.frames.size()) +
                                 " frames, expected " + std::to_string(cfg.frames));
        if (s.total_points() == 0)
            throw DegenerateInputError("point sequence with every frame empty");
        for (int f = 0; f < cfg.frames; ++f) {
            rows += s.frame_count(f);
            pb.frame_offsets.push_back(rows);
        }
    }
    // Points are canonicalized per frame (total order on their bit patterns)
    // so the encoder sees identical bytes whatever the input point order.
    std::vector<T> feats(static_cast<size_t>(rows) * feat_width);
    {
        size_t o = 0;
        std::vector<const float*> order;
        for (int b = 0; b < B; ++b)
            for (const auto& fr : seqs[static_cast<size_t>(b)]->frames) {
                const int n = static_cast<int>(fr.size()) / feat_width;
                order.clear();
                for (int i = 0; i < n; ++i) order.push_back(fr.data() + static_cast<size_t>(i) * feat_width);
                std::sort(order.begin(), order.end(), [feat_width](const float* a, const float* b) {
                    for (int c = 0; c < feat_width; ++c) {
                        uint32_t ua, ub;
                        std::memcpy(&ua, a + c, 4);
                        std::memcpy(&ub, b + c, 4);
                        if (ua != ub) return ua < ub;
                    }
                    return false;
                });
                for (const float* p : order)
                    for (int c = 0; c < feat_width; ++c) feats[o++] = static_cast<T>(p[c]);
            }
    }
    pb.feats = TensorT<T>::from_data({rows, feat_width}, std::move(feats));

    // Neighbors within each frame, ordered by (distance, index); ties on
    // exactly equal distances keep point order, which also keeps duplicate
    // points adjacent.
    pb.nbr_offsets.assign(static_cast<size_t>(rows) + 1, 0);
    const auto& fv = pb.feats.values();
    std::vector<std::pair<T, int>> cand;
    for (size_t seg = 0; seg + 1 < pb.frame_offsets.size(); ++seg) {
        const int lo = pb.frame_offsets[seg], hi = pb.frame_offsets[seg + 1];
        const int count = hi - lo;
        const int k = std::min(cfg.knn_k, count);
        for (int i = lo; i < hi; ++i) {
            cand.clear();
            const T* pi = fv.data() + static_cast<size_t>(i) * feat_width;
            for (int j = lo; j < hi; ++j) {
                const T* pj = fv.data() + static_cast<size_t>(j) * feat_width;
                T d2 = T(0);
                for (int c = 0; c < 3; ++c) {
                    const T d = pi[c] - pj[c];
                    d2 += d * d;
                }
                cand.emplace_back(d2, j);
            }
            std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
            for (int e = 0; e < k; ++e) pb.nbr.push_back(cand[static_cast<size_t>(e)].second);
            pb.nbr_offsets[static_cast<size_t>(i) + 1] = static_cast<int>(pb.nbr.size());
        }
    }
    pb.sample_offsets.resize(static_cast<size_t>(B) + 1);
    for (int b = 0; b <= B; ++b) pb.sample_offsets[static_cast<size_t>(b)] = b * cfg.frames;
    return pb;
}

// Per-sample encoder inputs (patch rows, canonical point order, local kNN
// lists) depend only on the sample, so training caches them once and batch
// assembly becomes concatenation.
template <typename T>
struct SampleCacheT {
    struct Points {
        std::vector<T> feats;          // canonical rows x feat_width
        std::vector<int> frame_counts;
        std::vector<int> nbr;          // sample-local row indices
        std::vector<int> nbr_offsets;  // rows + 1
    };
    struct PerSample {
        std::vector<T> video_rows;  // (frames * patches) x patch_dim
        Points lidar, radar;
    };

    ModelConfig cfg;
    std::unordered_map<int, int> slot;
    std::vector<PerSample> entries;

    static SampleCacheT build(const std::vector<Sample>& samples, const std::vector<int>& indices,
                              const ModelConfig& cfg) {
        SampleCacheT cache;
        cache.cfg = cfg;
        for (int i : indices) {
            if (cache.slot.count(i)) continue;
            const Sample& s = samples[static_cast<size_t>(i)];
            PerSample e;
            {
                std::vector<const VideoClip*> one{&s.video};
                e.video_rows = video_patches<T>(one, cfg).values();
            }
            auto fill = [&cfg](const PointSequence& seq, int fw, Points& p) {
                std::vector<const PointSequence*> one{&seq};
                auto pb = build_point_batch<T>(one, cfg, fw);
                p.feats = pb.feats.values();
                for (size_t f = 0; f + 1 < pb.frame_offsets.size(); ++f)
                    p.frame_counts.push_back(pb.frame_offsets[f + 1] - pb.frame_offsets[f]);
                p.nbr = pb.nbr;
                p.nbr_offsets = pb.nbr_offsets;
            };
            fill(s.lidar, cfg.lidar_feats, e.lidar);
            fill(s.radar, cfg.radar_feats, e.radar);
            cache.slot[i] = static_cast<int>(cache.entries.size());
            cache.entries.push_back(std::move(e));
        }
        return cache;
    }

    TensorT<T> video_rows_for(const std::vector<int>& indices) const {
        const int P = cfg.patches_per_frame();
        const int pd = cfg.patch_dim();
        const int per = cfg.frames * P;
        std::vector<T> rows(static_cast<size_t>(indices.size()) * per * pd);
        size_t o = 0;
        for (int i : indices) {
            const auto& v = entries[static_cast<size_t>(slot.at(i))].video_rows;
            std::copy(v.begin(), v.end(), rows.begin() + static_cast<long>(o));
            o += v.size();
        }
        return TensorT<T>::from_data({static_cast<int>(indices.size()) * per, pd}, std::move(rows));
    }

    PointBatchT<T> point_batch_for(const std::vector<int>& indices, Modality m) const {
        const int fw = m == Modality::Lidar ? cfg.lidar_feats : cfg.radar_feats;
        PointBatchT<T> pb;
        pb.batch = static_cast<int>(indices.size());
        pb.frame_offsets.push_back(0);
        size_t feat_total = 0, nbr_total = 0;
        for (int i : indices) {
            const auto& p = m == Modality::Lidar ? entries[static_cast<size_t>(slot.at(i))].lidar
                                                 : entries[static_cast<size_t>(slot.at(i))].radar;
            feat_total += p.feats.size();
            nbr_total += p.nbr.size();
        }
        std::vector<T> feats;
        feats.reserve(feat_total);
        pb.nbr.reserve(nbr_total);
        pb.nbr_offsets.push_back(0);
        int row_base = 0;
        for (int i : indices) {
            const auto& p = m == Modality::Lidar ? entries[static_cast<size_t>(slot.at(i))].lidar
                                                 : entries[static_cast<size_t>(slot.at(i))].radar;
            feats.insert(feats.end(), p.feats.begin(), p.feats.end());
            for (int c : p.frame_counts) pb.frame_offsets.push_back(pb.frame_offsets.back() + c);
            for (size_t r = 0; r + 1 < p.nbr_offsets.size(); ++r) {
                for (int e = p.nbr_offsets[r]; e < p.nbr_offsets[r + 1]; ++e)
                    pb.nbr.push_back(p.nbr[static_cast<size_t>(e)] + row_base);
                pb.nbr_offsets.push_back(static_cast<int>(pb.nbr.size()));
            }
            row_base += static_cast<int>(p.feats.size()) / fw;
        }
        pb.feats = TensorT<T>::from_data({row_base, fw}, std::move(feats));
        pb.sample_offsets.resize(indices.size() + 1);
        for (size_t b = 0; b < pb.sample_offsets.size(); ++b)
            pb.sample_offsets[b] = static_cast<int>(b) * cfg.frames;
        return pb;
    }
};

// ---------------------------------------------------------------------------
// Video encoder: patch embedding, factorized (spatial then temporal)
// attention blocks, mean pool, projection to the shared space.
// ---------------------------------------------------------------------------

template <typename T>
struct VideoEncoderT {
    ModelConfig cfg;
    LinearT<T> patch_embed;
    TensorT<T> spatial_pos;   // patches_per_frame x width
    TensorT<T> temporal_pos;  // frames x width

    struct VBlock {
        LayerNormT<T> ln_s;
        MhaT<T> att_s;
        LayerNormT<T> ln_t;
        MhaT<T> att_t;
        LayerNormT<T> ln_m;
        MlpT<T> mlp;
    };
    std::vector<VBlock> blocks;
    LinearT<T> out;

    static VideoEncoderT make(ParamStoreT<T>& store, const ModelConfig& cfg) {
        VideoEncoderT e;
        e.cfg = cfg;
        e.patch_embed = make_linear(store, "video.patch_embed", cfg.patch_dim(), cfg.width, true);
        e.spatial_pos = store.add_normal("video.spatial_pos", {cfg.patches_per_frame(), cfg.width}, T(0.02), true);
        e.temporal_pos = store.add_normal("video.temporal_pos", {cfg.frames, cfg.width}, T(0.02), true);
        for (int i = 0; i < cfg.video_blocks; ++i) {
            const std::string p = "video.block" + std::to_string(i);
            VBlock b;
            b.ln_s = make_layer_norm(store, p + ".ln_s", cfg.width, true);
            b.att_s = make_mha(store, p + ".spatial", cfg.width, cfg.heads, true);
            b.ln_t = make_layer_norm(store, p + ".ln_t", cfg.width, true);
            b.att_t = make_mha(store, p + ".temporal", cfg.width, cfg.heads, true);
            b.ln_m = make_layer_norm(store, p + ".ln_m", cfg.width, true);
            b.mlp = make_mlp(store, p + ".mlp", cfg.width, cfg.hidden(), true);
            e.blocks.push_back(std::move(b));
        }
        e.out = make_linear(store, "video.out", cfg.width, cfg.embed_dim, true);
        return e;
    }

    // patches: rows [b][f][p] as produced by video_patches.
    TensorT<T> forward(const TensorT<T>& patches, int batch) const {
        const int P = cfg.patches_per_frame();
        const int F = cfg.frames;
        auto x = patch_embed(patches);
        x = add(x, repeat_rows(spatial_pos, batch * F));
        x = add(x, repeat_rows(repeat_each_row(temporal_pos, P), batch));

        std::vector<int> spatial_off(static_cast<size_t>(batch) * F + 1);
        for (size_t i = 0; i < spatial_off.size(); ++i) spatial_off[i] = static_cast<int>(i) * P;
        std::vector<int> temporal_off(static_cast<size_t>(batch) * P + 1);
        for (size_t i = 0; i < temporal_off.size(); ++i) temporal_off[i] = static_cast<int>(i) * F;

        // [b][f][p] -> [b][p][f] and back
        std::vector<int> perm(static_cast<size_t>(batch) * F * P), perm_inv(perm.size());
        for (int b = 0; b < batch; ++b)
            for (int p = 0; p < P; ++p)
                for (int f = 0; f < F; ++f) {
                    const int dst = (b * P + p) * F + f;
                    const int src = (b * F + f) * P + p;
                    perm[static_cast<size_t>(dst)] = src;
                    perm_inv[static_cast<size_t>(src)] = dst;
                }

        for (const auto& blk : blocks) {
            x = add(x, blk.att_s(blk.ln_s(x), spatial_off));
            auto h = gather_rows(blk.ln_t(x), perm);
            auto a = blk.att_t(h, temporal_off);
            x = add(x, gather_rows(a, perm_inv));
            x = add(x, blk.mlp(blk.ln_m(x)));
        }

        std::vector<int> pool_off(static_cast<size_t>(batch) + 1);
        for (int b = 0; b <= batch; ++b) pool_off[static_cast<size_t>(b)] = b * F * P;
        return out(segment_mean_pool(x, pool_off));
    }
};

// ---------------------------------------------------------------------------
// Point encoder (LiDAR-like / radar-like): per-point lift, local kNN
// attention blocks, per-frame max pool, temporal transformer, projection.
// ---------------------------------------------------------------------------

template <typename T>
struct PointEncoderT {
    ModelConfig cfg;
    int feat_width = 3;
    LinearT<T> lift;

    struct PBlock {
        LayerNormT<T> ln_a;
        KnnAttnT<T> att;
        LayerNormT<T> ln_m;
        MlpT<T> mlp;
    };
    std::vector<PBlock> blocks;
    TensorT<T> temporal_pos;  // frames x width
    BlockT<T> temporal;
    LinearT<T> out;

    static PointEncoderT make(ParamStoreT<T>& store, const std::string& prefix,
                              const ModelConfig& cfg, int feat_width) {
        PointEncoderT e;
        e.cfg = cfg;
        e.feat_width = feat_width;
        e.lift = make_linear(store, prefix + ".lift", feat_width, cfg.width, true);
        for (int i = 0; i < cfg.point_blocks; ++i) {
            const std::string p = prefix + ".block" + std::to_string(i);
            PBlock b;
            b.ln_a = make_layer_norm(store, p + ".ln_a", cfg.width, true);
            b.att = make_knn_attn(store, p + ".att", cfg.width, true);
            b.ln_m = make_layer_norm(store, p + ".ln_m", cfg.width, true);
            b.mlp = make_mlp(store, p + ".mlp", cfg.width, cfg.hidden(), true);
            e.blocks.push_back(std::move(b));
        }
        e.temporal_pos = store.add_normal(prefix + ".temporal_pos", {cfg.frames, cfg.width}, T(0.02), true);
        e.temporal = make_block(store, prefix + ".temporal", cfg.width, cfg.heads, cfg.hidden(), true);
        e.out = make_linear(store, prefix + ".out", cfg.width, cfg.embed_dim, true);
        return e;
    }

    TensorT<T> forward(const PointBatchT<T>& pb) const {
        auto x = lift(pb.feats);
        for (const auto& blk : blocks) {
            x = add(x, blk.att(blk.ln_a(x), pb.nbr, pb.nbr_offsets));
            x = add(x, blk.mlp(blk.ln_m(x)));
        }
        // Empty frames pool to zero tokens.
        auto tokens = segment_max_pool(x, pb.frame_offsets);
        tokens = add(tokens, repeat_rows(temporal_pos, pb.batch));
        std::vector<int> toff(static_cast<size_t>(pb.batch) + 1);
        for (int b = 0; b <= pb.batch; ++b) toff[static_cast<size_t>(b)] = b * cfg.frames;
        tokens = temporal(tokens, toff);
        return out(segment_mean_pool(tokens, toff));
    }
};

// ---------------------------------------------------------------------------
// Text path: frozen token embedding + frozen transformer, learnable prompt
// bank around the tokens, trainable mapping layer into the shared space.
// ---------------------------------------------------------------------------

template <typename T>
struct PromptedSequenceT {
    TensorT<T> rows;            // (2n + length) x width
    std::vector<uint8_t> mask;  // 1 = attended; prompts are always attended
};

// Rows 0..n-1 are bank vectors 1..n, then the embedded tokens, then bank
// vectors n+1..2n. With n = 0 this is exactly the embedded tokens.
template <typename T>
PromptedSequenceT<T> assemble_prompted(const TokenSequence& t, const TensorT<T>& bank,
                                       const TensorT<T>& embed_table) {
    const int n = bank.defined() ? bank.dim(0) / 2 : 0;
    if (bank.defined() && embed_table.dim(1) != bank.dim(1))
        throw DimensionError("assemble_prompted: prompt width " + std::to_string(bank.dim(1)) +
                             " vs embed width " + std::to_string(embed_table.dim(1)));
    PromptedSequenceT<T> out;
    std::vector<TensorT<T>> parts;
    if (n > 0) parts.push_back(slice_rows(bank, 0, n));
    if (t.length() > 0) parts.push_back(gather_rows(embed_table, t.ids));
    if (n > 0) parts.push_back(slice_rows(bank, n, n));
    if (parts.empty()) throw ConfigError("assemble_prompted: empty sequence and no prompts");
    out.rows = parts.size() == 1 ? parts[0] : concat_rows(parts);
    out.mask.assign(static_cast<size_t>(out.rows.dim(0)), 1);
    return out;
}

template <typename T>
struct TextEncoderT {
    ModelConfig cfg;
    TensorT<T> token_embed;  // frozen
    std::vector<BlockT<T>> blocks;  // frozen
    LayerNormT<T> final_ln;  // frozen
    TensorT<T> prompt_bank;  // trainable; undefined when soft prompts are off
    LinearT<T> mapping;      // trainable G
    TensorT<T> pos_table;    // fixed sinusoidal rows

    static TextEncoderT make(ParamStoreT<T>& store, const ModelConfig& cfg, int vocab_size) {
        TextEncoderT e;
        e.cfg = cfg;
        e.token_embed = store.add_normal("text.token_embed", {vocab_size, cfg.width},
                                         T(1) / std::sqrt(T(cfg.width)), false);
        for (int i = 0; i < cfg.text_blocks; ++i)
            e.blocks.push_back(make_block(store, "text.block" + std::to_string(i), cfg.width,
                                          cfg.heads, cfg.hidden(), false));
        e.final_ln = make_layer_norm(store, "text.final_ln", cfg.width, false);
        if (cfg.soft_prompt && cfg.prompt_count > 0)
            e.prompt_bank = store.add_normal("text.prompt_bank", {2 * cfg.prompt_count, cfg.width},
                                             T(0.02), true);
        e.mapping = make_linear(store, "text.mapping", cfg.width, cfg.embed_dim, true);
        e.pos_table = sinusoidal_positions<T>(2 * cfg.prompt_count + 2 * cfg.max_text_len + 8,
                                              cfg.width, T(0.05));
        return e;
    }

    // One embedding per sequence; gradients reach the prompt bank and the
    // mapping layer only.
    TensorT<T> forward(const std::vector<TokenSequence>& seqs) const {
        std::vector<TensorT<T>> parts;
        std::vector<int> offsets{0};
        std::vector<int> pos_rows;
        TensorT<T> front, back;
        const int n = prompt_bank.defined() ? prompt_bank.dim(0) / 2 : 0;
        if (n > 0) {
            front = slice_rows(prompt_bank, 0, n);
            back = slice_rows(prompt_bank, n, n);
        }
        for (const auto& t : seqs) {
            int len = 0;
            if (n > 0) {
                parts.push_back(front);
                len += n;
            }
            if (t.length() > 0) {
                parts.push_back(gather_rows(token_embed, t.ids));
                len += t.length();
            }
            if (n > 0) {
                parts.push_back(back);
                len += n;
            }
            if (len == 0) throw ConfigError("text encoder: empty sequence and no prompts");
            for (int p = 0; p < len; ++p) pos_rows.push_back(p);
            offsets.push_back(offsets.back() + len);
        }
        auto x = parts.size() == 1 ? parts[0] : concat_rows(parts);
        x = add(x, gather_rows(pos_table, pos_rows));
        for (const auto& blk : blocks) x = blk(x, offsets);
        x = final_ln(x);
        return mapping(segment_mean_pool(x, offsets));
    }
};

}  // namespace senla
