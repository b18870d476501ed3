"""
Registry of experiment runs, one row per (plan output, scene, AV, attack).
"""
from django.db import models


class ExperimentRun(models.Model):
    """
    A single condition of a plan run.
    The CSVs live on disk; this row tracks status and the increment report.
    """

    STATUS_CHOICES = [
        ('pending', 'Pending'),
        ('running', 'Running'),
        ('completed', 'Completed'),
        ('failed', 'Failed'),
    ]

    output_root = models.CharField(max_length=500, help_text='Plan output directory')
    scene = models.CharField(max_length=100)
    av = models.PositiveSmallIntegerField(help_text='Victim design 1..4')
    attack = models.CharField(max_length=20)
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default='pending')
    error = models.TextField(blank=True)
    metrics_path = models.CharField(max_length=500, blank=True)

    # Increment over baseline (empty for baseline runs)
    frames = models.PositiveIntegerField(default=0)
    fp_inc = models.FloatField(null=True, blank=True)
    fn_inc = models.FloatField(null=True, blank=True)
    ft_inc = models.FloatField(null=True, blank=True)
    mt_inc = models.FloatField(null=True, blank=True)
    unsafe_scene = models.BooleanField(null=True, blank=True)
    false_alarm_frames = models.PositiveIntegerField(null=True, blank=True)

    created_at = models.DateTimeField(auto_now_add=True)
    updated_at = models.DateTimeField(auto_now=True)

    class Meta:
        ordering = ['output_root', 'scene', 'av', 'attack']
        constraints = [
            models.UniqueConstraint(fields=['output_root', 'scene', 'av', 'attack'], name='unique_experiment_run'),
        ]

    def __str__(self):
        return f"{self.scene}/av{self.av}/{self.attack} ({self.status})"

    def apply_report(self, report):
        """Copy an IncrementReport onto the row."""
        self.frames = report.frames
        self.fp_inc = report.fp_inc
        self.fn_inc = report.fn_inc
        self.ft_inc = report.ft_inc
        self.mt_inc = report.mt_inc
        self.unsafe_scene = report.unsafe_scene
        self.false_alarm_frames = report.false_alarm_frames
