#pragma once

#include "curved/confusion.hpp"
#include "curved/datagen.hpp"
#include "curved/errors.hpp"
#include "curved/io.hpp"
#include "curved/losses.hpp"
#include "curved/metric.hpp"
#include "curved/network.hpp"
#include "curved/rng.hpp"
#include "curved/train.hpp"
#include "curved/types.hpp"
