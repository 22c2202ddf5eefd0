#pragma once

#include "pira/buffer.hpp"
#include "pira/config.hpp"
#include "pira/harness.hpp"
#include "pira/link.hpp"
#include "pira/planner.hpp"
#include "pira/predictor.hpp"
#include "pira/qoe.hpp"
#include "pira/session.hpp"
#include "pira/simulator.hpp"
#include "pira/strategy.hpp"
#include "pira/synth.hpp"
#include "pira/trace.hpp"
#include "pira/types.hpp"
