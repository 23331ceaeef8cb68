// Copyright 2026 The cadpt Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cadpt/config.hpp"

namespace fixtures {

// A small model that still exercises every component.
inline cadpt::ModelConfig small_model() {
  cadpt::ModelConfig cfg;
  cfg.adapter.d_v = 24;
  cfg.adapter.d_t = 32;
  cfg.adapter.n_q = 4;
  cfg.adapter.n_heads = 2;
  cfg.adapter.d_hidden_mlp = 32;
  cfg.adapter.d_ff = 32;
  cfg.encoder.d_v = 24;
  cfg.lm.d_l = 32;
  cfg.lm.n_heads = 2;
  cfg.lm.d_ff = 64;
  return cfg;
}

inline cadpt::PipelineConfig small_pipeline(std::size_t steps = 20) {
  cadpt::PipelineConfig cfg;
  cfg.seed = 11;
  cfg.model = small_model();
  cfg.training.stage1 = {50, steps, 3e-3, 8};
  cfg.training.stage2 = {50, steps, 3e-3, 4};
  cfg.training.stage3 = {50, steps, 3e-3, 4};
  cfg.training.max_decode_len = 24;
  return cfg;
}

}  // namespace fixtures
