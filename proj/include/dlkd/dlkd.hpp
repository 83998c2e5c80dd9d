#pragma once

// Umbrella header: the full dark-video knowledge-distillation toolkit.

#include "dlkd/adamw.hpp"
#include "dlkd/config.hpp"
#include "dlkd/enhance.hpp"
#include "dlkd/errors.hpp"
#include "dlkd/experiment.hpp"
#include "dlkd/gradcheck.hpp"
#include "dlkd/gradcheck_suite.hpp"
#include "dlkd/graph.hpp"
#include "dlkd/io_util.hpp"
#include "dlkd/losses.hpp"
#include "dlkd/metrics.hpp"
#include "dlkd/model.hpp"
#include "dlkd/ops.hpp"
#include "dlkd/rng.hpp"
#include "dlkd/synth.hpp"
#include "dlkd/tensor.hpp"
#include "dlkd/trainer.hpp"
#include "dlkd/video.hpp"
