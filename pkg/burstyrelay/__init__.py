#!/usr/bin/env python3
"""Bursty two-user MIMO interference channel with an in-band relay."""
