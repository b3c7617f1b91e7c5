#pragma once

#include "duffing/error.hpp"
#include "duffing/linalg.hpp"
#include "duffing/gap_pair.hpp"
#include "duffing/beam_ops.hpp"
#include "duffing/forcing.hpp"
#include "duffing/dynamics.hpp"
#include "duffing/lyapunov.hpp"
#include "duffing/asymptotics.hpp"
