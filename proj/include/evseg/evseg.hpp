#pragma once

#include "evseg/bench.hpp"
#include "evseg/dataset.hpp"
#include "evseg/error.hpp"
#include "evseg/event.hpp"
#include "evseg/label_map.hpp"
#include "evseg/metrics.hpp"
#include "evseg/pgm.hpp"
#include "evseg/pipeline.hpp"
#include "evseg/repr.hpp"
#include "evseg/synth.hpp"
#include "evseg/toyseg.hpp"
