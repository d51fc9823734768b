// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fmica/asymptotics.hpp"
#include "fmica/csv.hpp"
#include "fmica/error.hpp"
#include "fmica/estimators.hpp"
#include "fmica/moments.hpp"
#include "fmica/numerics.hpp"
#include "fmica/rng.hpp"
#include "fmica/simulate.hpp"
#include "fmica/sources.hpp"
