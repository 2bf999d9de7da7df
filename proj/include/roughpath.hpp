#pragma once

// Umbrella header for the rough path library.

#include <roughpath/errors.hpp>
#include <roughpath/tensor.hpp>
#include <roughpath/grid.hpp>
#include <roughpath/rough_path.hpp>
#include <roughpath/controlled.hpp>
#include <roughpath/integral.hpp>
#include <roughpath/rde.hpp>
#include <roughpath/noise.hpp>
#include <roughpath/semigroup.hpp>
#include <roughpath/presets.hpp>
#include <roughpath/io.hpp>
