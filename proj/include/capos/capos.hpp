#pragma once

#include "capos/binarize.hpp"
#include "capos/cart.hpp"
#include "capos/causal.hpp"
#include "capos/classify.hpp"
#include "capos/common.hpp"
#include "capos/context.hpp"
#include "capos/export.hpp"
#include "capos/structure.hpp"
