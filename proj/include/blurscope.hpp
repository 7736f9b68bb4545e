#pragma once

#include "blurscope/error.hpp"
#include "blurscope/rng.hpp"
#include "blurscope/image.hpp"
#include "blurscope/pnm.hpp"
#include "blurscope/dataset.hpp"
#include "blurscope/synth.hpp"
#include "blurscope/laplacian.hpp"
#include "blurscope/cnn/tensor.hpp"
#include "blurscope/cnn/layers.hpp"
#include "blurscope/cnn/model.hpp"
#include "blurscope/cnn/serialize.hpp"
#include "blurscope/cnn/train.hpp"
#include "blurscope/eval.hpp"
