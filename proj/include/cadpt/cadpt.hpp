// Copyright 2026 The cadpt Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cadpt/adapter.hpp"
#include "cadpt/attention.hpp"
#include "cadpt/checkpoint.hpp"
#include "cadpt/config.hpp"
#include "cadpt/contrastive.hpp"
#include "cadpt/dataset.hpp"
#include "cadpt/encoder.hpp"
#include "cadpt/gradcheck.hpp"
#include "cadpt/gradient_suite.hpp"
#include "cadpt/lm.hpp"
#include "cadpt/metrics.hpp"
#include "cadpt/model.hpp"
#include "cadpt/ops.hpp"
#include "cadpt/optimizer.hpp"
#include "cadpt/params.hpp"
#include "cadpt/plan.hpp"
#include "cadpt/random.hpp"
#include "cadpt/snapshot.hpp"
#include "cadpt/tensor.hpp"
#include "cadpt/text.hpp"
#include "cadpt/training.hpp"
