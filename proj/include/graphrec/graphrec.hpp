#pragma once

// Umbrella header.

#include "graphrec/checkpoint.hpp"
#include "graphrec/common.hpp"
#include "graphrec/experiments.hpp"
#include "graphrec/graph.hpp"
#include "graphrec/metrics.hpp"
#include "graphrec/model.hpp"
#include "graphrec/params.hpp"
#include "graphrec/synth.hpp"
#include "graphrec/tape.hpp"
#include "graphrec/tensor.hpp"
#include "graphrec/train.hpp"
