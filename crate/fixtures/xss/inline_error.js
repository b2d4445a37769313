app.get('/err', function (req, res) {
  var reason = req.reason;
  res.send(escape(reason));
});
