#include "senla/trainer.hpp"

#include <algorithm>
#include <cstdio>

namespace senla {

Trainer::Trainer(Model& model, const Dataset& data, const std::vector<int>& train_indices,
                 TrainConfig tcfg, LossConfig lcfg)
    : model_(model),
      data_(data),
      train_idx_(train_indices),
      tcfg_(std::move(tcfg)),
      lcfg_(lcfg),
      opt_(model.params),
      shuffle_rng_(Rng::derive(tcfg_.seed, 0x65706f6368ull)) {
    tcfg_.validate();
    lcfg_.validate();
    if (train_idx_.empty()) throw ConfigError("trainer: empty training set");
    const int ks = model_.registry.seen_count();
    for (int i : train_idx_) {
        const auto& s = data_.samples[static_cast<size_t>(i)];
        if (s.class_id < 0 || s.class_id >= ks)
            throw ConfigError("trainer: training set contains unseen class id " +
                              std::to_string(s.class_id));
    }
    cache_ = SampleCacheT<float>::build(data_.samples, train_idx_, model_.cfg);
}

EpochStats Trainer::train_epoch(int epoch) {
    EpochStats stats;
    stats.epoch = epoch;
    stats.lr = lr_schedule(epoch, tcfg_.lr, tcfg_.lr_steps, tcfg_.lr_decay);

    std::vector<int> order = train_idx_;
    for (size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[static_cast<size_t>(shuffle_rng_.uniform_int(static_cast<int>(i)))]);

    const auto mods = model_.modalities();
    // Single-modality runs use weight 1 so separate-training rows stay on the
    // same loss scale; joint runs use the configured modality weights.
    auto weight_of = [&](Modality m) -> float {
        if (mods.size() == 1) return 1.0f;
        switch (m) {
            case Modality::Video: return lcfg_.alpha;
            case Modality::Lidar: return lcfg_.beta;
            default: return lcfg_.gamma;
        }
    };

    double total_loss = 0;
    std::map<std::string, double> branch_sums;
    int64_t total_n = 0;

    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(tcfg_.batch_size)) {
        const size_t end = std::min(order.size(), start + static_cast<size_t>(tcfg_.batch_size));
        std::vector<int> batch;
        std::vector<int> labels;
        for (size_t i = start; i < end; ++i) {
            batch.push_back(order[i]);
            labels.push_back(data_.samples[static_cast<size_t>(order[i])].class_id);
        }

        model_.params.zero_grads();
        Tensor joint;
        Tensor text_emb;
        if (model_.cfg.mode == "contrastive") text_emb = model_.text_embeddings(LabelSpace::SeenOnly);
        for (Modality m : mods) {
            auto emb = model_.encode_cached(cache_, batch, m);
            Tensor branch;
            if (model_.cfg.mode == "contrastive") {
                auto sim = similarity(emb, text_emb, lcfg_.normalize);
                branch = info_nce(sim, labels, lcfg_.tau);
            } else {
                branch = cross_entropy(model_.head_logits(emb, m), labels);
            }
            branch_sums[modality_name(m)] += branch.item() * static_cast<double>(batch.size());
            auto weighted = scale(branch, model_.cfg.mode == "contrastive" ? weight_of(m) : 1.0f);
            joint = joint.defined() ? add(joint, weighted) : weighted;
        }
        joint.backward();
        opt_.step(stats.lr, tcfg_.momentum, tcfg_.weight_decay);

        total_loss += joint.item() * static_cast<double>(batch.size());
        total_n += static_cast<int64_t>(batch.size());
    }

    stats.loss = total_loss / static_cast<double>(total_n);
    for (auto& [k, v] : branch_sums) stats.branches[k] = v / static_cast<double>(total_n);
    return stats;
}

std::vector<EpochStats> Trainer::run(const std::function<void(const EpochStats&)>& on_epoch) {
    std::vector<EpochStats> all;
    for (int e = 0; e < tcfg_.epochs; ++e) {
        all.push_back(train_epoch(e));
        if (on_epoch) on_epoch(all.back());
    }
    return all;
}

std::string epoch_header(const std::vector<Modality>& mods) {
    std::string h = "epoch\tlr\tloss";
    for (Modality m : mods) h += std::string("\tl_") + modality_name(m);
    return h;
}

std::string format_epoch_line(const EpochStats& s, const std::vector<Modality>& mods) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%d\t%.8f\t%.6f", s.epoch + 1, static_cast<double>(s.lr), s.loss);
    std::string line = buf;
    for (Modality m : mods) {
        auto it = s.branches.find(modality_name(m));
        std::snprintf(buf, sizeof(buf), "\t%.6f", it == s.branches.end() ? 0.0 : it->second);
        line += buf;
    }
    return line;
}

}  // namespace senla
