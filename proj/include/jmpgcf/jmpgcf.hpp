#pragma once

#include "checkpoint.hpp"
#include "dataset.hpp"
#include "dense.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "graph.hpp"
#include "layers.hpp"
#include "loss.hpp"
#include "model.hpp"
#include "optimizer.hpp"
#include "parallel.hpp"
#include "sampler.hpp"
#include "sparse.hpp"
#include "training.hpp"
