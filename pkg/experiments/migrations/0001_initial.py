# Generated by Django 5.0.1 on 2026-10-18 09:12

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('output_root', models.CharField(help_text='Plan output directory', max_length=500)),
                ('scene', models.CharField(max_length=100)),
                ('av', models.PositiveSmallIntegerField(help_text='Victim design 1..4')),
                ('attack', models.CharField(max_length=20)),
                ('status', models.CharField(choices=[('pending', 'Pending'), ('running', 'Running'), ('completed', 'Completed'), ('failed', 'Failed')], default='pending', max_length=20)),
                ('error', models.TextField(blank=True)),
                ('metrics_path', models.CharField(blank=True, max_length=500)),
                ('frames', models.PositiveIntegerField(default=0)),
                ('fp_inc', models.FloatField(blank=True, null=True)),
                ('fn_inc', models.FloatField(blank=True, null=True)),
                ('ft_inc', models.FloatField(blank=True, null=True)),
                ('mt_inc', models.FloatField(blank=True, null=True)),
                ('unsafe_scene', models.BooleanField(blank=True, null=True)),
                ('false_alarm_frames', models.PositiveIntegerField(blank=True, null=True)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('updated_at', models.DateTimeField(auto_now=True)),
            ],
            options={
                'ordering': ['output_root', 'scene', 'av', 'attack'],
            },
        ),
        migrations.AddConstraint(
            model_name='experimentrun',
            constraint=models.UniqueConstraint(fields=('output_root', 'scene', 'av', 'attack'), name='unique_experiment_run'),
        ),
    ]
