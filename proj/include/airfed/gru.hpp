#pragma once

#include <vector>

#include "airfed/tensor.hpp"

namespace airfed::graphnn {

// Standard GRU cell. Convention: h' = (1 - z) .* h + z .* h_cand, so a
// closed update gate (z = 0) passes the previous hidden state through.
struct GruParams {
    nn::Param wz, uz, bz;
    nn::Param wr, ur, br;
    nn::Param wh, uh, bh;
    int dim = 0;

    GruParams() = default;
    GruParams(int input_dim, int hidden_dim)
        : wz(input_dim, hidden_dim), uz(hidden_dim, hidden_dim), bz(1, hidden_dim),
          wr(input_dim, hidden_dim), ur(hidden_dim, hidden_dim), br(1, hidden_dim),
          wh(input_dim, hidden_dim), uh(hidden_dim, hidden_dim), bh(1, hidden_dim),
          dim(hidden_dim) {}

    std::vector<nn::Param*> params() { return {&wz, &uz, &bz, &wr, &ur, &br, &wh, &uh, &bh}; }

    void init(Rng& rng) {
        for (auto* p : params()) nn::init_glorot(*p, rng);
    }
};

inline nn::Var gru_step(nn::Tape& t, const nn::Var& x, const nn::Var& h, GruParams& p) {
    using namespace nn;
    Var z = sigmoid(add(add(matmul(x, param(t, p.wz)), matmul(h, param(t, p.uz))),
                        param(t, p.bz), "gru_z_pre"),
                    "gru_z");
    Var r = sigmoid(add(add(matmul(x, param(t, p.wr)), matmul(h, param(t, p.ur))),
                        param(t, p.br), "gru_r_pre"),
                    "gru_r");
    Var h_cand = tanh_act(add(add(matmul(x, param(t, p.wh)),
                                  matmul(hadamard(r, h, "gru_rh"), param(t, p.uh))),
                              param(t, p.bh), "gru_cand_pre"),
                          "gru_cand");
    // (1 - z) .* h + z .* h_cand
    Var keep = sub(h, hadamard(z, h, "gru_zh"), "gru_keep");
    return add(keep, hadamard(z, h_cand, "gru_zc"), "gru_h_next");
}

}  // namespace airfed::graphnn
