#pragma once

#include "priorvqa/adam.hpp"
#include "priorvqa/autograd.hpp"
#include "priorvqa/correlation.hpp"
#include "priorvqa/distortion.hpp"
#include "priorvqa/error.hpp"
#include "priorvqa/evaluate.hpp"
#include "priorvqa/gradcheck.hpp"
#include "priorvqa/keyvalue.hpp"
#include "priorvqa/network.hpp"
#include "priorvqa/ops.hpp"
#include "priorvqa/rng.hpp"
#include "priorvqa/run_config.hpp"
#include "priorvqa/scoring.hpp"
#include "priorvqa/tensor.hpp"
#include "priorvqa/trainer.hpp"
#include "priorvqa/video_io.hpp"
#include "priorvqa/weights_io.hpp"
