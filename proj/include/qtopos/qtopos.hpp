#pragma once

#include "qtopos/error.hpp"
#include "qtopos/numerics.hpp"
#include "qtopos/contexts.hpp"
#include "qtopos/kernel.hpp"
#include "qtopos/quantum.hpp"
#include "qtopos/prop.hpp"
#include "qtopos/scenario.hpp"
