#pragma once

#include "bimh/block_engine.hpp"
#include "bimh/estimators.hpp"
#include "bimh/harness.hpp"
#include "bimh/imh.hpp"
#include "bimh/models.hpp"
#include "bimh/parallel.hpp"
#include "bimh/permutations.hpp"
#include "bimh/probit.hpp"
#include "bimh/rao_blackwell.hpp"
#include "bimh/rng.hpp"
