#pragma once

#include "core.hpp"
#include "physics.hpp"
#include "seqlang.hpp"
#include "engine.hpp"
#include "harness.hpp"
#include "config.hpp"
#include "io.hpp"
