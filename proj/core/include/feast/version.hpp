#pragma once

#define FEAST_VERSION "0.1.0"
