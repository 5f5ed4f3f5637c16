#pragma once

#include <string>
#include <vector>

#include "senla/model.hpp"
#include "senla/synthdata.hpp"

namespace senla {

struct Prediction {
    int class_id = -1;
    // (class_id, score) sorted by descending score, ties broken by lowest id.
    std::vector<std::pair<int, float>> ranking;
};

// Class scores precomputed once per (model, label space); inference over a
// split reuses it across samples.
struct ClassScorer {
    LabelSpace space = LabelSpace::Full;
    bool normalize = true;
    bool onehot = false;
    std::vector<float> text_embs;  // K x embed_dim, normalized when requested
    int classes = 0;
    int dim = 0;
};

ClassScorer make_class_scorer(const Model& model, LabelSpace space, const LossConfig& lcfg);

// Full ranking of one embedding (or one logits row in onehot mode) against
// the scorer's classes. predict() routes through this.
Prediction rank_embedding(const ClassScorer& scorer, const std::vector<float>& emb);

Prediction predict(const Model& model, const ClassScorer& scorer, const Sample& sample, Modality m);

struct EvalReport {
    std::string modality;
    std::string split;
    std::string label_space;
    std::vector<double> seen_per_class;    // indexed by class id
    std::vector<double> unseen_per_class;  // indexed by (class id - seen_count)
    std::vector<int> per_class_counts;
    double seen_avg = 0;
    double unseen_avg = 0;
    std::vector<std::vector<int>> confusion;  // rows = true class, cols = predicted

    std::string render_table(const Registry& registry) const;
    std::string to_json(const Registry& registry) const;
};

EvalReport evaluate(const Model& model, const Dataset& data, const std::vector<int>& indices,
                    Modality m, LabelSpace space, const LossConfig& lcfg,
                    const std::string& split_tag = "");

// One row per (sample, modality) plus one per class text; every row carries
// the full embedding and a seeded power-iteration 2-d projection.
void dump_embeddings(const Model& model, const Dataset& data, const std::vector<int>& indices,
                     const LossConfig& lcfg, const std::string& path);

}  // namespace senla
