#!/usr/bin/env python
# -*- coding: utf-8 -*-
# Copyright (c) The anxietysense project
# This code is distributed under the two-clause BSD License.

from setuptools import setup

setup()
