# -*- coding: utf-8 -*-
"""
评估包
"""

from .harness import (TrialReport, CampaignSummary, Comparison, run_campaign, summarize, compare,
                      export_report, load_report, boxplot_data, trial_rows, TRIAL_FIELDS, SUMMARY_FIELDS)
from .policies import noop_policy, random_policy, guided_policy

__all__ = ['TrialReport', 'CampaignSummary', 'Comparison', 'run_campaign', 'summarize', 'compare',
           'export_report', 'load_report', 'boxplot_data', 'trial_rows', 'TRIAL_FIELDS', 'SUMMARY_FIELDS',
           'noop_policy', 'random_policy', 'guided_policy']
