# coding=utf-8