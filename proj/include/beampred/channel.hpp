// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "channel/episode.hpp"
#include "channel/geometry.hpp"
#include "channel/scenario.hpp"
#include "channel/types.hpp"
