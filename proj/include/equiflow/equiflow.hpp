#pragma once

#include "errors.hpp"
#include "network.hpp"
#include "tntp.hpp"
#include "costs.hpp"
#include "paths.hpp"
#include "softpaths.hpp"
#include "accel.hpp"
#include "assignment.hpp"
#include "demand.hpp"
#include "multistage.hpp"
#include "modal.hpp"
