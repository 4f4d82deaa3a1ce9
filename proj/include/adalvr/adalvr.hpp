#ifndef ADALVR_ADALVR_HPP
#define ADALVR_ADALVR_HPP

#include "adalvr/bench.hpp"
#include "adalvr/core.hpp"
#include "adalvr/dataset.hpp"
#include "adalvr/estimators.hpp"
#include "adalvr/optimizer.hpp"
#include "adalvr/problem.hpp"
#include "adalvr/scaling.hpp"
#include "adalvr/verify.hpp"

#endif  // ADALVR_ADALVR_HPP
