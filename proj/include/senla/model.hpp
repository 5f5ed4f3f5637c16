#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "senla/encoders.hpp"
#include "senla/loss.hpp"

namespace senla {

// The assembled system: whichever sensor encoders the configuration asks for,
// plus the text pathway (contrastive mode) or per-modality classifier heads
// (onehot mode). All parameters live in one named store.
template <typename T>
struct ModelT {
    ModelConfig cfg;
    Registry registry;
    Vocabulary vocab;
    uint64_t seed = 0;
    ParamStoreT<T> params;

    std::optional<VideoEncoderT<T>> video;
    std::optional<PointEncoderT<T>> lidar;
    std::optional<PointEncoderT<T>> radar;
    std::optional<TextEncoderT<T>> text;
    std::optional<LinearT<T>> head_video, head_lidar, head_radar;

    ModelT(ModelConfig cfg_, Registry registry_, Vocabulary vocab_, uint64_t seed_)
        : cfg(std::move(cfg_)),
          registry(std::move(registry_)),
          vocab(std::move(vocab_)),
          seed(seed_),
          params(seed_) {
        cfg.validate();
        registry.validate();
        if (cfg.has_modality(Modality::Video)) video = VideoEncoderT<T>::make(params, cfg);
        if (cfg.has_modality(Modality::Lidar))
            lidar = PointEncoderT<T>::make(params, "lidar", cfg, cfg.lidar_feats);
        if (cfg.has_modality(Modality::Radar))
            radar = PointEncoderT<T>::make(params, "radar", cfg, cfg.radar_feats);
        if (cfg.mode == "contrastive") {
            text = TextEncoderT<T>::make(params, cfg, vocab.size());
        } else {
            const int ks = registry.seen_count();
            if (cfg.has_modality(Modality::Video))
                head_video = make_linear(params, "head.video", cfg.embed_dim, ks, true);
            if (cfg.has_modality(Modality::Lidar))
                head_lidar = make_linear(params, "head.lidar", cfg.embed_dim, ks, true);
            if (cfg.has_modality(Modality::Radar))
                head_radar = make_linear(params, "head.radar", cfg.embed_dim, ks, true);
        }
    }

    TensorT<T> encode_video(const std::vector<const VideoClip*>& clips) const {
        if (!video) throw ConfigError("model has no video encoder");
        return video->forward(video_patches<T>(clips, cfg), static_cast<int>(clips.size()));
    }

    TensorT<T> encode_points(const std::vector<const PointSequence*>& seqs, Modality m) const {
        const PointEncoderT<T>* enc = m == Modality::Lidar ? (lidar ? &*lidar : nullptr)
                                                           : (radar ? &*radar : nullptr);
        if (m == Modality::Video || !enc)
            throw ConfigError(std::string("model has no ") + modality_name(m) + " point encoder");
        return enc->forward(build_point_batch<T>(seqs, cfg, enc->feat_width));
    }

    TensorT<T> encode_cached(const SampleCacheT<T>& cache, const std::vector<int>& indices,
                             Modality m) const {
        if (m == Modality::Video) {
            if (!video) throw ConfigError("model has no video encoder");
            return video->forward(cache.video_rows_for(indices), static_cast<int>(indices.size()));
        }
        const PointEncoderT<T>* enc = m == Modality::Lidar ? (lidar ? &*lidar : nullptr)
                                                           : (radar ? &*radar : nullptr);
        if (!enc) throw ConfigError(std::string("model has no ") + modality_name(m) + " point encoder");
        return enc->forward(cache.point_batch_for(indices, m));
    }

    TensorT<T> encode_samples(const std::vector<const Sample*>& samples, Modality m) const {
        if (m == Modality::Video) {
            std::vector<const VideoClip*> clips;
            clips.reserve(samples.size());
            for (const auto* s : samples) clips.push_back(&s->video);
            return encode_video(clips);
        }
        std::vector<const PointSequence*> seqs;
        seqs.reserve(samples.size());
        for (const auto* s : samples)
            seqs.push_back(m == Modality::Lidar ? &s->lidar : &s->radar);
        return encode_points(seqs, m);
    }

    // Class text embeddings over the chosen label space, assembled with the
    // training rule (zero_shot_text selects the alternate reading).
    TensorT<T> text_embeddings(LabelSpace space) const {
        if (!text) throw ConfigError("model has no text encoder (onehot mode)");
        auto seqs = zero_shot_tokens(vocab, registry, space, cfg.use_description,
                                     cfg.zero_shot_text, cfg.max_text_len);
        return text->forward(seqs);
    }

    TensorT<T> head_logits(const TensorT<T>& emb, Modality m) const {
        const std::optional<LinearT<T>>* h = nullptr;
        switch (m) {
            case Modality::Video: h = &head_video; break;
            case Modality::Lidar: h = &head_lidar; break;
            case Modality::Radar: h = &head_radar; break;
        }
        if (!h || !h->has_value()) throw ConfigError("model has no classifier head for this modality");
        return (**h)(emb);
    }

    // Hash over the non-trainable parameter set (the frozen text backbone).
    uint64_t frozen_hash() const { return params.values_hash_by_trainable(false); }

    std::vector<Modality> modalities() const {
        std::vector<Modality> ms;
        if (video) ms.push_back(Modality::Video);
        if (lidar) ms.push_back(Modality::Lidar);
        if (radar) ms.push_back(Modality::Radar);
        return ms;
    }

    template <typename U>
    std::unique_ptr<ModelT<U>> cast() const {
        auto m = std::make_unique<ModelT<U>>(cfg, registry, vocab, seed);
        m->params.copy_values_from(params);
        return m;
    }
};

using Model = ModelT<float>;

}  // namespace senla
