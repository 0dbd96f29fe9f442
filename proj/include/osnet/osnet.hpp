#pragma once

#include "osnet/io.hpp"
#include "osnet/matrix.hpp"
#include "osnet/model.hpp"
#include "osnet/numerics.hpp"
#include "osnet/ode.hpp"
#include "osnet/stability.hpp"
#include "osnet/svg.hpp"
#include "osnet/systems.hpp"
#include "osnet/train.hpp"
