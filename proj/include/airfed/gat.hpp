#pragma once

#include <vector>

#include "airfed/graph.hpp"
#include "airfed/tensor.hpp"

namespace airfed::graphnn {

// One GAT layer: full-width value projection plus per-head query/key
// projections. Keys see [node features || edge features] split into a node
// part and an edge part so edge attributes modulate the attention score.
struct GatLayerParams {
    nn::Param w_coop, w_serv, w_cross;            // d_in x d_out
    std::vector<nn::Param> q_coop, kn_coop, ke_coop;  // per head
    std::vector<nn::Param> q_serv, kn_serv, ke_serv;

    int d_out = 0;
    int heads = 0;

    GatLayerParams() = default;
    GatLayerParams(int d_in, int d_out_, int heads_)
        : w_coop(d_in, d_out_), w_serv(d_in, d_out_), w_cross(d_in, d_out_), d_out(d_out_),
          heads(heads_) {
        int dk = d_out_ / heads_;
        for (int h = 0; h < heads_; ++h) {
            q_coop.emplace_back(d_in, dk);
            kn_coop.emplace_back(d_in, dk);
            ke_coop.emplace_back(kCoopEdgeDim, dk);
            q_serv.emplace_back(d_in, dk);
            kn_serv.emplace_back(d_in, dk);
            ke_serv.emplace_back(kServEdgeDim, dk);
        }
    }

    void collect(std::vector<nn::Param*>& out) {
        out.push_back(&w_coop);
        out.push_back(&w_serv);
        out.push_back(&w_cross);
        for (auto* vec : {&q_coop, &kn_coop, &ke_coop, &q_serv, &kn_serv, &ke_serv})
            for (auto& p : *vec) out.push_back(&p);
    }
};

struct GatParams {
    GatLayerParams layer1, layer2;
    nn::Param w_fuse, b_fuse;
    int spatial_dim = 0;

    GatParams() = default;
    GatParams(const NetConfig& net)
        : layer1(kCoopFeatureDim, net.gat_hidden1, net.attention_heads),
          layer2(net.gat_hidden1, net.gat_hidden2, net.attention_heads),
          w_fuse(2 * net.gat_hidden2, net.gru_dim), b_fuse(1, net.gru_dim),
          spatial_dim(net.gru_dim) {}

    std::vector<nn::Param*> params() {
        std::vector<nn::Param*> out;
        layer1.collect(out);
        layer2.collect(out);
        out.push_back(&w_fuse);
        out.push_back(&b_fuse);
        return out;
    }

    void init(Rng& rng) {
        for (auto* p : params()) nn::init_glorot(*p, rng);
    }
};

namespace detail {

// Scaled dot-product attention over the masked neighborhood of every node.
// Returns the per-head neighbor-weighted value projection, heads
// concatenated along columns.
inline nn::Var attention_block(nn::Tape& t, const nn::Var& h_in, const nn::Mat& edges_flat,
                               const nn::Mat& mask, nn::Param& w_value,
                               std::vector<nn::Param>& q_proj, std::vector<nn::Param>& kn_proj,
                               std::vector<nn::Param>& ke_proj, int d_out, int heads,
                               long* row_violations) {
    long N = h_in.rows();
    int dk = d_out / heads;
    int chunk = d_out / heads;
    nn::Var edges = nn::constant(t, edges_flat, "edge_feats");
    nn::Var hw = nn::matmul(h_in, nn::param(t, w_value), "value_proj");
    nn::Var out{};
    for (int h = 0; h < heads; ++h) {
        nn::Var q = nn::matmul(h_in, nn::param(t, q_proj[static_cast<size_t>(h)]), "q_proj");
        nn::Var kn = nn::matmul(h_in, nn::param(t, kn_proj[static_cast<size_t>(h)]), "k_node_proj");
        nn::Var s_node = nn::matmul_nt(q, kn, "score_node");
        nn::Var ke = nn::matmul(edges, nn::param(t, ke_proj[static_cast<size_t>(h)]), "k_edge_proj");
        nn::Var s_edge = nn::edge_dot(q, ke, N, "score_edge");
        nn::Var s = nn::scale(nn::add(s_node, s_edge, "score"), 1.0 / std::sqrt(double(dk)),
                              "score_scaled");
        nn::Var att = nn::masked_softmax_rows(s, mask, "attention");
        if (row_violations) {
            for (long i = 0; i < N; ++i) {
                double rs = att.val().row(i).sum();
                bool empty = mask.row(i).sum() < 0.5;
                if (!empty && std::abs(rs - 1.0) > 1e-6) ++*row_violations;
            }
        }
        nn::Var head_out = nn::matmul(att, nn::slice_cols(hw, h * chunk, chunk), "head_out");
        out = h == 0 ? head_out : nn::concat_cols(out, head_out, "head_concat");
    }
    return out;
}

}  // namespace detail

// Two stacked dual-layer GAT updates followed by the fusion projection of
// the self-node embeddings. `audit` (optional) counts attention rows that
// fail to sum to 1 and transfer rows that are neither normalized nor zero.
inline nn::Var gat_forward(nn::Tape& t, const LocalGraph& g, GatParams& p,
                           AuditCounters* audit = nullptr) {
    if (audit) {
        for (long i = 0; i < g.transfer.rows(); ++i) {
            double s = g.transfer.row(i).sum();
            if (std::abs(s - 1.0) > 1e-6 && std::abs(s) > 0.0) ++audit->transfer_rows;
        }
    }
    long* att_violations = audit ? &audit->attention_rows : nullptr;

    nn::Var h_coop = nn::constant(t, g.coop_feats, "coop_feats");
    nn::Var h_serv = nn::constant(t, g.serv_feats, "serv_feats");
    nn::Var transfer = nn::constant(t, g.transfer, "transfer_matrix");

    for (GatLayerParams* layer : {&p.layer1, &p.layer2}) {
        nn::Var coop_agg = detail::attention_block(t, h_coop, g.coop_edges_flat, g.coop_mask,
                                                   layer->w_coop, layer->q_coop, layer->kn_coop,
                                                   layer->ke_coop, layer->d_out, layer->heads,
                                                   att_violations);
        nn::Var cross = nn::matmul(transfer,
                                   nn::matmul(h_serv, nn::param(t, layer->w_cross), "cross_proj"),
                                   "cross_message");
        nn::Var serv_agg = detail::attention_block(t, h_serv, g.serv_edges_flat, g.serv_mask,
                                                   layer->w_serv, layer->q_serv, layer->kn_serv,
                                                   layer->ke_serv, layer->d_out, layer->heads,
                                                   att_violations);
        h_coop = nn::relu(nn::add(coop_agg, cross, "coop_pre"), "coop_act");
        h_serv = nn::relu(serv_agg, "serv_act");
    }

    nn::Var self_pair = nn::concat_cols(nn::row(h_coop, 0, "coop_self"),
                                        nn::row(h_serv, 0, "serv_self"), "fusion_in");
    return nn::add(nn::matmul(self_pair, nn::param(t, p.w_fuse), "fusion_proj"),
                   nn::param(t, p.b_fuse), "spatial_embedding");
}

// Feed-forward substitute for the GAT used by the feature-net ablation:
// pooled graph statistics through a two-layer MLP of the same output width.
struct MlpExtractorParams {
    nn::Param w1, b1, w2, b2;
    int in_dim = 0;

    MlpExtractorParams() = default;
    MlpExtractorParams(const NetConfig& net)
        : w1(kCoopFeatureDim + kCoopFeatureDim + kServFeatureDim + 2, net.gru_dim),
          b1(1, net.gru_dim), w2(net.gru_dim, net.gru_dim), b2(1, net.gru_dim),
          in_dim(kCoopFeatureDim + kCoopFeatureDim + kServFeatureDim + 2) {}

    std::vector<nn::Param*> params() { return {&w1, &b1, &w2, &b2}; }
    void init(Rng& rng) {
        for (auto* p : params()) nn::init_glorot(*p, rng);
    }
};

inline nn::Var mlp_forward(nn::Tape& t, const LocalGraph& g, MlpExtractorParams& p) {
    nn::Mat in = nn::Mat::Zero(1, p.in_dim);
    long off = 0;
    in.middleCols(off, kCoopFeatureDim) = g.coop_feats.row(0);
    off += kCoopFeatureDim;
    if (g.n_coop() > 1) {
        nn::Mat neigh = g.coop_feats.bottomRows(g.n_coop() - 1).colwise().mean();
        in.middleCols(off, kCoopFeatureDim) = neigh;
    }
    off += kCoopFeatureDim;
    if (g.n_serv() > 1) {
        nn::Mat devs = g.serv_feats.bottomRows(g.n_serv() - 1).colwise().mean();
        in.middleCols(off, kServFeatureDim) = devs;
    }
    off += kServFeatureDim;
    in(0, off) = static_cast<double>(g.n_coop() - 1);
    in(0, off + 1) = static_cast<double>(g.n_serv() - 1);

    nn::Var x = nn::constant(t, in, "mlp_in");
    nn::Var h1 = nn::relu(nn::add(nn::matmul(x, nn::param(t, p.w1)), nn::param(t, p.b1)), "mlp_h1");
    return nn::add(nn::matmul(h1, nn::param(t, p.w2)), nn::param(t, p.b2), "mlp_out");
}

}  // namespace airfed::graphnn
