#pragma once

#include "natent/dkw.hpp"
#include "natent/entropy.hpp"
#include "natent/simulate.hpp"
#include "natent/types.hpp"
#include "natent/zipf.hpp"
